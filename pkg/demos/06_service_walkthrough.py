"""
Driving the control service
===========================

The same engine behind HTTP: an admin composes the plant, a plain user
runs what-if simulations, telemetry counts the bytes that actually
crossed the chassis ports, and every mutation lands in the audit log.
Uses the in-process test client so the demo needs no open port; point a
real deployment at `fabrictwin serve --state ./state`.
"""

from fastapi.testclient import TestClient

from fabrictwin.service import ServiceConfig, create_app

ADMIN = {"Authorization": "Bearer admin-token"}
USER = {"Authorization": "Bearer user-token"}

app = create_app(ServiceConfig())
with TestClient(app) as api:
    print("health:", api.get("/v1/health").json())

    # admin applies the all-pooled configuration
    r = api.post("/v1/composition", headers=ADMIN, json={"action": "apply", "label": "falconGPUs"})
    print(f"applied falconGPUs, revision {r.json()['revision']}")

    # the user is sandboxed: mode changes are refused, simulation is fine
    denied = api.post(
        "/v1/composition", headers=USER,
        json={"action": "mode", "drawer": "drawer-1", "mode": "STANDARD_1HOST"},
    )
    print(f"user mode change -> {denied.status_code} {denied.json()['error']['code']}")

    sim = api.post(
        "/v1/simulate", headers=USER,
        json={"workload": "bert-l", "strategy": {"precision": "FP16_MIXED"}, "record_steps": 5},
    ).json()
    step = sim["step"]
    print(
        f"bert-l on current composition: step {step['total_s'] * 1e3:.1f} ms "
        f"(comm {step['comm_s'] * 1e3:.1f} ms), traffic {sim['pcie_traffic_gbps']:.1f} GB/s, "
        f"run {sim['run_id']}"
    )

    # five recorded steps produced real counters on both chassis ports
    counters = api.get(f"/v1/telemetry/runs/{sim['run_id']}/counters", headers=USER).json()
    for port, c in counters["ports"].items():
        print(f"  {port}: in {c['ingress_bytes'] / 1e9:.2f} GB, out {c['egress_bytes'] / 1e9:.2f} GB")

    q = api.get(f"/v1/telemetry/runs/{sim['run_id']}", headers=USER).json()
    print(f"  whole-run mean rate {q['mean_gbps']:.1f} GB/s  (matches the estimate above)")

    # the audit trail is admin-only reading
    print("\nevents:")
    print(api.get("/v1/events", headers=ADMIN).text)
