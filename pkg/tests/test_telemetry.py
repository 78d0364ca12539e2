"""Per-port/per-slot counter accounting, windowed queries, and the audit log."""

import pytest

from fabrictwin import (
    EventLog,
    Parallelism,
    Precision,
    Strategy,
    TelemetryStore,
    TwinError,
    apply_named_configuration,
    step_time,
)
from fabrictwin.telemetry import EVENT_ACTIONS

DDP16 = Strategy(Parallelism.DDP, Precision.FP16_MIXED)


@pytest.fixture()
def falcon_run(topo, workloads, named):
    """Two recorded steps of the all-pooled BERT-L configuration."""
    comp = named("falconGPUs")
    step = step_time(workloads["bert-l"], comp, DDP16)
    store = TelemetryStore()
    store.start_run("run-1", comp, workload="bert-l", strategy=DDP16.key())
    store.record_step("run-1", step, comp)
    store.record_step("run-1", step, comp)
    return store, comp, step


class TestCounters:
    def test_identical_steps_double_exactly(self, falcon_run):
        store, comp, step = falcon_run
        one = TelemetryStore()
        one.start_run("r", comp)
        one.record_step("r", step, comp)
        for port, counters in store.counters("run-1").items():
            single = one.counters("r")[port]
            assert counters.ingress_bytes == 2 * single.ingress_bytes
            assert counters.egress_bytes == 2 * single.egress_bytes

    def test_run_totals_are_steps_times_crossing_bytes(self, falcon_run):
        store, _, step = falcon_run
        assert store.run_totals("run-1") == pytest.approx(
            2 * step.bytes_crossing_falcon_ports, rel=1e-12
        )

    def test_both_host_ports_carry_traffic(self, falcon_run):
        store, _, _ = falcon_run
        counters = store.counters("run-1")
        assert set(counters) == {"H1", "H2"}
        for c in counters.values():
            assert c.ingress_bytes > 0 or c.egress_bytes > 0

    def test_local_configuration_records_nothing(self, topo, workloads, named):
        comp = named("localGPUs")
        step = step_time(workloads["bert-l"], comp, DDP16)
        assert step.bytes_crossing_falcon_ports == 0.0
        store = TelemetryStore()
        store.start_run("r", comp)
        store.record_step("r", step, comp)
        assert store.counters("r") == {}
        assert store.run_totals("r") == 0.0
        assert store.clock("r") == pytest.approx(step.total_s)

    def test_clock_advances_per_step(self, falcon_run):
        store, _, step = falcon_run
        assert store.clock("run-1") == pytest.approx(2 * step.total_s, rel=1e-12)

    def test_runs_listing(self, falcon_run):
        store, _, _ = falcon_run
        (run,) = store.runs()
        assert run["run_id"] == "run-1"
        assert run["workload"] == "bert-l"
        assert run["strategy"] == "ddp+fp16"
        assert run["steps"] == 2

    def test_duplicate_run_id(self, falcon_run):
        store, comp, _ = falcon_run
        with pytest.raises(TwinError) as e:
            store.start_run("run-1", comp)
        assert e.value.code == "DUPLICATE_ID"

    def test_unknown_run(self, falcon_run):
        store, _, _ = falcon_run
        with pytest.raises(TwinError) as e:
            store.counters("run-9")
        assert e.value.code == "UNKNOWN_RUN"

    def test_injected_errors_show_up_in_csv(self, falcon_run):
        store, _, _ = falcon_run
        store.inject_errors("run-1", "H2", 3)
        lines = store.counters_csv("run-1").strip().splitlines()
        assert lines[0] == "port,window_start,window_end,ingress_bytes,egress_bytes,errors"
        assert len(lines) == 3  # header + H1 + H2
        h2 = dict(zip(lines[0].split(","), lines[2].split(",")))
        assert h2["port"] == "H2"
        assert h2["errors"] == "3"
        assert float(h2["window_start"]) == 0.0
        assert float(h2["window_end"]) == pytest.approx(store.clock("run-1"))


class TestQueries:
    def test_whole_run_rate_matches_estimate(self, topo, workloads, named):
        from fabrictwin import training_time

        comp = named("falconGPUs")
        est = training_time(workloads["bert-l"], comp, DDP16)
        store = TelemetryStore()
        store.start_run("r", comp)
        for _ in range(4):
            store.record_step("r", est.step, comp)
        q = store.query("r")
        assert q["mean_gbps"] == pytest.approx(est.pcie_traffic_gbps, rel=1e-9)
        assert q["ingress_bytes"] + q["egress_bytes"] == pytest.approx(
            4 * est.step.bytes_crossing_falcon_ports, rel=1e-12
        )

    def test_port_queries_sum_to_run(self, falcon_run):
        store, _, _ = falcon_run
        whole = store.query("run-1")
        parts = [store.query("run-1", scope="port", scope_id=p) for p in ("H1", "H2")]
        assert sum(p["ingress_bytes"] for p in parts) == whole["ingress_bytes"]
        assert sum(p["egress_bytes"] for p in parts) == whole["egress_bytes"]

    def test_slot_sums_match_drawer_totals(self, falcon_run):
        store, comp, _ = falcon_run
        for drawer in ("drawer-1", "drawer-2"):
            by_drawer = store.query("run-1", scope="drawer", scope_id=drawer)
            slot_in = slot_eg = 0.0
            for slot in range(8):
                q = store.query("run-1", scope="slot", scope_id=f"{drawer}/{slot}")
                slot_in += q["ingress_bytes"]
                slot_eg += q["egress_bytes"]
            assert slot_in == by_drawer["ingress_bytes"]
            assert slot_eg == by_drawer["egress_bytes"]

    def test_drawer_totals_cover_the_run(self, falcon_run):
        store, _, _ = falcon_run
        d1 = store.query("run-1", scope="drawer", scope_id="drawer-1")
        d2 = store.query("run-1", scope="drawer", scope_id="drawer-2")
        total = (
            d1["ingress_bytes"] + d1["egress_bytes"] + d2["ingress_bytes"] + d2["egress_bytes"]
        )
        assert total == pytest.approx(store.run_totals("run-1"), rel=1e-12)

    def test_window_before_first_step_is_empty(self, falcon_run):
        store, _, step = falcon_run
        q = store.query("run-1", window=(0.0, step.total_s / 2))
        assert q["ingress_bytes"] == 0.0 and q["egress_bytes"] == 0.0
        assert q["mean_gbps"] == 0.0

    def test_window_captures_only_finished_steps(self, falcon_run):
        store, _, step = falcon_run
        per_step = step.bytes_crossing_falcon_ports
        first = store.query("run-1", window=(0.0, step.total_s))
        assert first["ingress_bytes"] + first["egress_bytes"] == pytest.approx(
            per_step, rel=1e-12
        )
        second = store.query("run-1", window=(step.total_s, 2 * step.total_s))
        assert second["ingress_bytes"] + second["egress_bytes"] == pytest.approx(
            per_step, rel=1e-12
        )

    def test_window_boundary_is_half_open(self, falcon_run):
        """A step landing exactly on the window start is excluded."""
        store, _, step = falcon_run
        t_end = store._run("run-1").steps[0].t_end
        q = store.query("run-1", window=(t_end, t_end + 1e-6))
        assert q["ingress_bytes"] == 0.0

    def test_unknown_scope(self, falcon_run):
        store, _, _ = falcon_run
        with pytest.raises(TwinError) as e:
            store.query("run-1", scope="rack")
        assert e.value.code == "UNKNOWN_SCOPE"

    def test_malformed_slot_id(self, falcon_run):
        store, _, _ = falcon_run
        with pytest.raises(TwinError) as e:
            store.query("run-1", scope="slot", scope_id="drawer-1")
        assert e.value.code == "UNKNOWN_SCOPE"

    def test_state_round_trip(self, falcon_run):
        store, _, _ = falcon_run
        store.inject_errors("run-1", "H1", 2)
        revived = TelemetryStore.from_state(store.to_state())
        assert revived.to_state() == store.to_state()
        assert revived.counters_csv("run-1") == store.counters_csv("run-1")
        assert revived.query("run-1") == store.query("run-1")


class TestEventLog:
    def test_sequence_is_gap_free(self):
        log = EventLog()
        for i, action in enumerate(EVENT_ACTIONS):
            record = log.append("alice", action, [f"subject-{i}"])
            assert record.seq == i + 1
        assert [e.seq for e in log.records()] == list(range(1, len(EVENT_ACTIONS) + 1))
        assert len(log) == len(EVENT_ACTIONS)

    def test_outcome_defaults_ok(self):
        log = EventLog()
        ok = log.append("alice", "attach", ["gpu-1"])
        bad = log.append("alice", "attach", ["gpu-1"], outcome="ALREADY_OWNED")
        assert ok.outcome == "ok" and bad.outcome == "ALREADY_OWNED"

    def test_unknown_action_rejected(self):
        with pytest.raises(TwinError) as e:
            EventLog().append("alice", "reboot", [])
        assert e.value.code == "UNKNOWN_SCOPE"

    def test_filters(self):
        log = EventLog()
        log.append("alice", "attach", ["a"])
        log.append("bob", "attach", ["b"])
        log.append("alice", "detach", ["a"])
        assert [e.actor for e in log.records(action="attach")] == ["alice", "bob"]
        assert [e.action for e in log.records(actor="alice")] == ["attach", "detach"]
        assert len(log.records(action="attach", actor="bob")) == 1

    def test_export_requires_admin(self):
        log = EventLog()
        log.append("alice", "attach", ["a"])
        with pytest.raises(TwinError) as e:
            log.export(admin=False)
        assert e.value.code == "FORBIDDEN"

    def test_export_formats(self):
        log = EventLog()
        log.append("alice", "attach", ["gpu-1", "host-1"])
        log.append("root", "mode-change", ["drawer-1"], outcome="MODE_CONFLICT")
        text = log.export(admin=True)
        assert "[1]" in text and "alice attach gpu-1 host-1 -> ok" in text
        assert "mode-change drawer-1 -> MODE_CONFLICT" in text
        csv_out = log.export(admin=True, fmt="csv")
        lines = csv_out.strip().splitlines()
        assert lines[0] == "seq,timestamp,actor,action,subjects,outcome"
        assert len(lines) == 3
        filtered = log.export(admin=True, actor="root", fmt="csv")
        assert len(filtered.strip().splitlines()) == 2

    def test_state_round_trip(self):
        log = EventLog()
        log.append("alice", "simulate", ["bert"], outcome="ok")
        log.append("root", "import", [])
        revived = EventLog.from_state(log.to_state())
        assert revived.to_state() == log.to_state()
        # appending after revival continues the sequence
        assert revived.append("root", "export", []).seq == 3
