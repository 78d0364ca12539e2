"""HTTP control service: compose, simulate, and watch the twin remotely.

A thin JSON layer over the library: one process owns the authoritative
composition for a chassis and serializes all mutations behind a lock.
Authentication is a static token -> principal map from the service config;
authorization is role-based:

* ADMIN  - everything, including drawer mode changes, label application,
           configuration import and event-log export.
* USER   - read everything, attach pooled devices (becoming their owner),
           detach only devices they own, and run simulations.

Every authenticated mutating request appends exactly one event record with
its outcome, successful or not, and successful mutations are snapshotted
to the state directory (``snapshot.json`` rewritten atomically plus an
append-only ``events.jsonl``), so a restart reproduces revision, counters
and the audit trail exactly.  A corrupt state directory refuses to load
(STATE_CORRUPT) rather than guessing.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from . import __version__
from .calibration import default_calibrated_workloads
from .composition import (
    Composition,
    DrawerMode,
    apply_named_configuration,
    attach,
    detach,
    export_config,
    import_config,
    new_composition,
    set_drawer_mode,
    validate,
)
from .errors import ServiceError, TwinError
from .fabric import build_reference_topology, build_topology, to_document
from .perf import estimate_as_dict, relative_change, step_time, training_time
from .telemetry import EventLog, TelemetryStore
from .workloads import Parallelism, Precision, Strategy, workload_catalog

DEFAULT_TOKENS = {
    "admin-token": {"user": "admin", "role": "ADMIN"},
    "user-token": {"user": "alice", "role": "USER"},
}

_STATUS_BY_CODE = {
    "FORBIDDEN": 403,
    "UNKNOWN_DEVICE": 404,
    "UNKNOWN_RUN": 404,
    "UNKNOWN_LABEL": 404,
    "NO_PATH": 404,
    "MISSING_ESTIMATE": 404,
    "SCHEMA_ERROR": 400,
    "UNKNOWN_SCOPE": 400,
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8030
    state_path: str | None = None  # directory; None keeps state in memory only
    tokens: dict = field(default_factory=lambda: dict(DEFAULT_TOKENS))
    topology_document: dict | None = None
    static_dir: str | None = None  # optional built web UI

    @classmethod
    def from_file(cls, path: str) -> "ServiceConfig":
        with open(path) as f:
            raw = json.load(f)
        cfg = cls(
            host=raw.get("host", "127.0.0.1"),
            port=raw.get("port", 8030),
            state_path=raw.get("state_path"),
            tokens=raw.get("tokens", dict(DEFAULT_TOKENS)),
            topology_document=raw.get("topology"),
            static_dir=raw.get("static_dir"),
        )
        return cfg.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        listen = os.environ.get("FABRICTWIN_LISTEN")
        if listen:
            host, _, port = listen.rpartition(":")
            self.host = host or self.host
            self.port = int(port)
        state = os.environ.get("FABRICTWIN_STATE")
        if state:
            self.state_path = state
        return self


@dataclass(frozen=True)
class Principal:
    user: str
    role: str  # ADMIN | USER

    @property
    def admin(self) -> bool:
        return self.role == "ADMIN"


class ControlState:
    """Authoritative state for one chassis, with write-through persistence."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.lock = threading.Lock()
        self.topology = (
            build_topology(config.topology_document)
            if config.topology_document
            else build_reference_topology()
        )
        # compute times are calibrated against the reference plant the
        # baselines were measured on, independent of the served topology
        self.workloads = default_calibrated_workloads()
        self.composition = new_composition(self.topology)
        self.telemetry = TelemetryStore()
        self.events = EventLog()
        self.run_seq = 0
        if config.state_path:
            self._load()

    # -- persistence -----------------------------------------------------

    def _snapshot_path(self) -> str:
        return os.path.join(self.config.state_path, "snapshot.json")

    def _events_path(self) -> str:
        return os.path.join(self.config.state_path, "events.jsonl")

    def _load(self):
        os.makedirs(self.config.state_path, exist_ok=True)
        snap = self._snapshot_path()
        if os.path.exists(snap):
            try:
                with open(snap) as f:
                    raw = json.load(f)
                comp = import_config(self.topology, raw["composition"])
                self.composition = Composition(
                    topology=comp.topology,
                    modes=comp.modes,
                    ownership=comp.ownership,
                    revision=raw["revision"],
                    link_overrides=comp.link_overrides,
                )
                self.telemetry = TelemetryStore.from_state(raw.get("telemetry", {}))
                self.run_seq = raw.get("run_seq", 0)
            except (json.JSONDecodeError, KeyError, ValueError, TypeError, TwinError) as e:
                raise ServiceError("STATE_CORRUPT", f"cannot load {snap}: {e}") from e
        events = self._events_path()
        if os.path.exists(events):
            try:
                records = []
                with open(events) as f:
                    for line in f:
                        if line.strip():
                            records.append(json.loads(line))
                self.events = EventLog.from_state(records)
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise ServiceError("STATE_CORRUPT", f"cannot load {events}: {e}") from e

    def persist(self):
        if not self.config.state_path:
            return
        os.makedirs(self.config.state_path, exist_ok=True)
        snap = {
            "composition": export_config(self.composition),
            "revision": self.composition.revision,
            "telemetry": self.telemetry.to_state(),
            "run_seq": self.run_seq,
        }
        tmp = self._snapshot_path() + ".tmp"
        with open(tmp, "w") as f:
            json.dump(snap, f, indent=2, sort_keys=True)
        os.replace(tmp, self._snapshot_path())

    def log_event(self, principal: Principal, action: str, subjects, outcome: str = "ok"):
        record = self.events.append(principal.user, action, subjects, outcome)
        if self.config.state_path:
            os.makedirs(self.config.state_path, exist_ok=True)
            line = {
                "seq": record.seq,
                "timestamp": record.timestamp,
                "actor": record.actor,
                "action": record.action,
                "subjects": list(record.subjects),
                "outcome": record.outcome,
            }
            with open(self._events_path(), "a") as f:
                f.write(json.dumps(line, sort_keys=True) + "\n")
        return record

    def next_run_id(self) -> str:
        self.run_seq += 1
        return f"run-{self.run_seq}"


def _error_response(e: TwinError) -> JSONResponse:
    status = _STATUS_BY_CODE.get(e.code, 409)
    return JSONResponse(
        status_code=status, content={"error": {"code": e.code, "message": e.message}}
    )


def _parse_strategy(raw: dict | None) -> Strategy:
    raw = raw or {}
    try:
        return Strategy(
            parallelism=Parallelism(raw.get("parallelism", "DDP")),
            precision=Precision(raw.get("precision", "FP16_MIXED")),
            sharded=bool(raw.get("sharded", False)),
        )
    except ValueError as e:
        raise ServiceError("SCHEMA_ERROR", f"bad strategy: {e}") from None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ControlState(config)
    app = FastAPI(title="fabrictwin control service", version=__version__)
    app.state.control = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def principal_of(request: Request) -> Principal:
        token = None
        auth = request.headers.get("authorization", "")
        if auth.lower().startswith("bearer "):
            token = auth[7:].strip()
        token = token or request.headers.get("x-auth-token")
        entry = config.tokens.get(token or "")
        if entry is None:
            raise ServiceError("FORBIDDEN", "unknown or missing token")
        return Principal(user=entry["user"], role=entry.get("role", "USER"))

    @app.exception_handler(TwinError)
    async def twin_error_handler(_request, exc: TwinError):
        return _error_response(exc)

    # -- read endpoints --------------------------------------------------

    @app.get("/v1/health")
    def health(request: Request):
        body = {
            "status": "ok",
            "version": __version__,
            "revision": state.composition.revision,
            "events": len(state.events),
        }
        # Health stays open, but a valid token gets its identity echoed back so
        # clients can gate role-specific controls without a separate probe.
        try:
            principal = principal_of(request)
        except ServiceError:
            pass
        else:
            body["principal"] = {"user": principal.user, "role": principal.role}
        return body

    @app.get("/v1/topology")
    def topology(request: Request):
        principal_of(request)
        return {"topology": to_document(state.topology)}

    @app.get("/v1/workloads")
    def workloads(request: Request):
        principal_of(request)
        return {"workloads": workload_catalog()}

    @app.get("/v1/composition")
    def composition_get(request: Request):
        principal_of(request)
        comp = state.composition
        return {
            "revision": comp.revision,
            "document": export_config(comp),
            "violations": [
                {"drawer": v.drawer, "rule": v.rule, "detail": v.detail} for v in validate(comp)
            ],
        }

    @app.get("/v1/composition/export")
    def composition_export(request: Request):
        principal = principal_of(request)
        with state.lock:
            doc = export_config(state.composition)
            state.log_event(principal, "export", ["composition"])
            state.persist()
        return doc

    # -- mutations -------------------------------------------------------

    @app.post("/v1/composition")
    async def composition_post(request: Request):
        principal = principal_of(request)
        body = await request.json()
        action = body.get("action")
        with state.lock:
            comp = state.composition
            outcome = "ok"
            subjects = []
            try:
                if action == "attach":
                    device, host = body.get("device", ""), body.get("host", "")
                    subjects = [device, host]
                    user = body.get("user") or principal.user
                    if user != principal.user and not principal.admin:
                        raise ServiceError("FORBIDDEN", "only admins attach on behalf of others")
                    state.composition = attach(comp, device, host, user)
                elif action == "detach":
                    device = body.get("device", "")
                    subjects = [device]
                    state.composition = detach(
                        comp, device, principal.user, admin=principal.admin
                    )
                elif action == "mode":
                    drawer, mode = body.get("drawer", ""), body.get("mode", "")
                    subjects = [drawer, mode]
                    if not principal.admin:
                        raise ServiceError("FORBIDDEN", "drawer mode changes are admin-only")
                    state.composition = set_drawer_mode(comp, drawer, DrawerMode(mode))
                elif action == "apply":
                    label = body.get("label", "")
                    subjects = [label]
                    if not principal.admin:
                        raise ServiceError("FORBIDDEN", "label application is admin-only")
                    state.composition = apply_named_configuration(
                        state.topology, label, body.get("host"), principal.user
                    )
                else:
                    raise ServiceError("SCHEMA_ERROR", f"unknown action {action!r}")
            except ValueError:
                outcome = "SCHEMA_ERROR"
                err = ServiceError("SCHEMA_ERROR", f"bad drawer mode {body.get('mode')!r}")
                state.log_event(principal, _event_action(action), subjects, outcome)
                state.persist()
                return _error_response(err)
            except TwinError as e:
                outcome = e.code
                state.log_event(principal, _event_action(action), subjects, outcome)
                state.persist()
                return _error_response(e)
            state.log_event(principal, _event_action(action), subjects, outcome)
            state.persist()
            return {
                "revision": state.composition.revision,
                "document": export_config(state.composition),
            }

    @app.post("/v1/composition/import")
    async def composition_import(request: Request):
        principal = principal_of(request)
        body = await request.json()
        with state.lock:
            try:
                if not principal.admin:
                    raise ServiceError("FORBIDDEN", "configuration import is admin-only")
                state.composition = import_config(state.topology, body)
            except TwinError as e:
                state.log_event(principal, "import", ["composition"], e.code)
                state.persist()
                return _error_response(e)
            state.log_event(principal, "import", ["composition"])
            state.persist()
            return {
                "revision": state.composition.revision,
                "document": export_config(state.composition),
            }

    @app.post("/v1/simulate")
    async def simulate(request: Request):
        principal = principal_of(request)
        body = await request.json()
        workload_key = body.get("workload", "")
        if workload_key not in state.workloads:
            return _error_response(ServiceError("UNKNOWN_DEVICE", f"no workload {workload_key!r}"))
        workload = state.workloads[workload_key]
        strategy = _parse_strategy(body.get("strategy"))
        label = body.get("label")
        with state.lock:
            try:
                if label is not None:
                    comp = apply_named_configuration(state.topology, label, body.get("host"))
                elif body.get("composition") is not None:
                    comp = import_config(state.topology, body["composition"])
                else:
                    comp = state.composition
                est = training_time(workload, comp, strategy, label=label)
                try:
                    record_steps = int(body.get("record_steps", 10))
                except (TypeError, ValueError):
                    raise ServiceError("SCHEMA_ERROR", "record_steps must be an integer") from None
                run_id = None
                if record_steps > 0:
                    run_id = body.get("run_id") or state.next_run_id()
                    state.telemetry.start_run(run_id, comp, workload_key, strategy.key())
                    step = step_time(workload, comp, strategy)
                    for _ in range(record_steps):
                        state.telemetry.record_step(run_id, step, comp)
            except TwinError as e:
                state.log_event(principal, "simulate", [workload_key, label or "current"], e.code)
                state.persist()
                return _error_response(e)
            state.log_event(principal, "simulate", [workload_key, label or "current"])
            state.persist()
            payload = estimate_as_dict(est)
            payload["run_id"] = run_id
            # Clients chart the percent change against the local-GPU reference
            # configuration; compute it here so no client ever re-derives it.
            try:
                base = training_time(
                    workload,
                    apply_named_configuration(state.topology, "localGPUs", body.get("host")),
                    strategy,
                    label="localGPUs",
                )
                payload["vs_local"] = {
                    "label": "localGPUs",
                    "total_pct": relative_change(est, base),
                }
            except TwinError:
                payload["vs_local"] = None
            return payload

    # -- telemetry -------------------------------------------------------

    @app.get("/v1/telemetry/runs")
    def telemetry_runs(request: Request):
        principal_of(request)
        return {"runs": state.telemetry.runs()}

    @app.get("/v1/telemetry/runs/{run_id}")
    def telemetry_query(
        request: Request,
        run_id: str,
        scope: str = "run",
        scope_id: str | None = None,
        start: float | None = None,
        end: float | None = None,
    ):
        principal_of(request)
        window = None
        if start is not None or end is not None:
            window = (start or 0.0, end if end is not None else state.telemetry.clock(run_id))
        return state.telemetry.query(run_id, scope=scope, scope_id=scope_id, window=window)

    @app.get("/v1/telemetry/runs/{run_id}/counters")
    def telemetry_counters(request: Request, run_id: str, format: str = "json"):
        principal_of(request)
        if format == "csv":
            return PlainTextResponse(state.telemetry.counters_csv(run_id))
        counters = state.telemetry.counters(run_id)
        return {
            "run_id": run_id,
            "ports": {
                p: {
                    "drawer": c.drawer,
                    "ingress_bytes": c.ingress_bytes,
                    "egress_bytes": c.egress_bytes,
                    "errors": c.errors,
                }
                for p, c in sorted(counters.items())
            },
        }

    @app.get("/v1/events")
    def events(
        request: Request,
        action: str | None = None,
        actor: str | None = None,
        format: str = "text",
    ):
        principal = principal_of(request)
        return PlainTextResponse(
            state.events.export(admin=principal.admin, action=action, actor=actor, fmt=format)
        )

    if config.static_dir and os.path.isdir(config.static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def _event_action(action: str | None) -> str:
    return {"attach": "attach", "detach": "detach", "mode": "mode-change", "apply": "apply"}.get(
        action or "", "apply"
    )


def serve(config: ServiceConfig | None = None):
    """Run the service; raises BIND_FAILURE when the port cannot be taken."""
    import uvicorn

    config = config or ServiceConfig()
    app = create_app(config)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    except (OSError, SystemExit) as e:
        raise ServiceError("BIND_FAILURE", f"cannot listen on {config.host}:{config.port}: {e}")
