"""Port traffic counters and the management event log.

Counters meter the chassis uplink ports: every recorded training step
apportions its fabric-crossing bytes over the host-port traversals of the
ring schedule, so drawer and per-slot views are exact decompositions of the
same volume (a slot is charged for the crossing bytes its device sent or
received, not for intra-drawer switch traffic, and storage DMA is not
metered).  The time base is simulated: a run's clock advances by each
step's modeled total, which keeps runs deterministic and windows
reproducible.  Counters are monotonic within a run and reset only by
deleting the run.  Link-error counts exist as injectable fixtures and stay
zero otherwise.

The event log is append-only with gap-free sequence numbers; exporting it
is an administrator action.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .composition import Composition
from .errors import TelemetryError
from .perf import StepBreakdown, crossing_traversals

EVENT_ACTIONS = ("attach", "detach", "mode-change", "apply", "import", "export", "simulate")


@dataclass
class PortCounters:
    port: str
    drawer: str | None
    ingress_bytes: float = 0.0
    egress_bytes: float = 0.0
    errors: int = 0


@dataclass
class _StepRecord:
    index: int
    t_start: float
    t_end: float
    port_deltas: dict  # port -> (ingress, egress)
    slot_deltas: dict  # (drawer, slot) -> (ingress, egress)
    bytes_crossing: float


@dataclass
class _Run:
    run_id: str
    workload: str
    strategy: str
    revision: int
    clock_s: float = 0.0
    steps: list = field(default_factory=list)
    ports: dict = field(default_factory=dict)  # port -> PortCounters
    slots: dict = field(default_factory=dict)  # (drawer, slot) -> [ingress, egress]


class TelemetryStore:
    def __init__(self):
        self._runs: dict[str, _Run] = {}

    # -- runs ------------------------------------------------------------

    def start_run(
        self, run_id: str, comp: Composition, workload: str = "", strategy: str = ""
    ) -> None:
        if run_id in self._runs:
            raise TelemetryError("DUPLICATE_ID", f"run {run_id!r} already exists")
        self._runs[run_id] = _Run(
            run_id=run_id, workload=workload, strategy=strategy, revision=comp.revision
        )

    def delete_run(self, run_id: str) -> None:
        self._run(run_id)
        del self._runs[run_id]

    def runs(self):
        return [
            {
                "run_id": r.run_id,
                "workload": r.workload,
                "strategy": r.strategy,
                "steps": len(r.steps),
                "clock_s": r.clock_s,
            }
            for r in self._runs.values()
        ]

    def _run(self, run_id: str) -> _Run:
        try:
            return self._runs[run_id]
        except KeyError:
            raise TelemetryError("UNKNOWN_RUN", f"no run {run_id!r}") from None

    # -- recording -------------------------------------------------------

    def record_step(self, run_id: str, step: StepBreakdown, comp: Composition) -> None:
        run = self._run(run_id)
        _, records = crossing_traversals(comp)
        port_deltas: dict = {}
        slot_deltas: dict = {}
        if records:
            volume = step.bytes_crossing_falcon_ports / len(records)
            for port, drawer, direction, device in records:
                slot = (drawer, comp.topology.slot_of(device))
                pi, pe = port_deltas.get(port, (0.0, 0.0))
                si, se = slot_deltas.get(slot, (0.0, 0.0))
                if direction == "in":
                    port_deltas[port] = (pi + volume, pe)
                    slot_deltas[slot] = (si + volume, se)
                else:
                    port_deltas[port] = (pi, pe + volume)
                    slot_deltas[slot] = (si, se + volume)
                counters = run.ports.setdefault(port, PortCounters(port=port, drawer=drawer))
                if direction == "in":
                    counters.ingress_bytes += volume
                else:
                    counters.egress_bytes += volume
                totals = run.slots.setdefault(slot, [0.0, 0.0])
                totals[0 if direction == "in" else 1] += volume
        t_start = run.clock_s
        run.clock_s = t_start + step.total_s
        run.steps.append(
            _StepRecord(
                index=len(run.steps),
                t_start=t_start,
                t_end=run.clock_s,
                port_deltas=port_deltas,
                slot_deltas=slot_deltas,
                bytes_crossing=step.bytes_crossing_falcon_ports,
            )
        )

    def inject_errors(self, run_id: str, port: str, count: int) -> None:
        """Test fixture: bump a port's link-error counter."""
        run = self._run(run_id)
        counters = run.ports.setdefault(port, PortCounters(port=port, drawer=None))
        counters.errors += count

    # -- queries ---------------------------------------------------------

    def counters(self, run_id: str) -> dict:
        run = self._run(run_id)
        return dict(run.ports)

    def run_totals(self, run_id: str) -> float:
        """Total crossing bytes over the whole run (both directions)."""
        run = self._run(run_id)
        return sum(c.ingress_bytes + c.egress_bytes for c in run.ports.values())

    def clock(self, run_id: str) -> float:
        return self._run(run_id).clock_s

    def query(
        self,
        run_id: str,
        scope: str = "run",
        scope_id: str | None = None,
        window: tuple | None = None,
    ) -> dict:
        """Byte totals and mean rate for a scope within a time window.

        Scopes: ``run`` (all ports), ``port``/``drawer``/``slot`` with a
        scope id (slot ids look like "drawer-1/0").  The window defaults to
        the whole run; a step contributes when it finishes inside the
        window.  Empty windows report zero.
        """
        run = self._run(run_id)
        if window is None:
            window = (0.0, run.clock_s)
        start, end = window
        ingress = egress = 0.0
        for rec in run.steps:
            if not (start < rec.t_end <= end):
                continue
            if scope == "run":
                for pi, pe in rec.port_deltas.values():
                    ingress += pi
                    egress += pe
            elif scope == "port":
                pi, pe = rec.port_deltas.get(scope_id, (0.0, 0.0))
                ingress += pi
                egress += pe
            elif scope == "drawer":
                for (drawer, _slot), (si, se) in rec.slot_deltas.items():
                    if drawer == scope_id:
                        ingress += si
                        egress += se
            elif scope == "slot":
                try:
                    drawer, slot = scope_id.rsplit("/", 1)
                    key = (drawer, int(slot))
                except (AttributeError, ValueError):
                    raise TelemetryError(
                        "UNKNOWN_SCOPE", f"slot scope ids look like 'drawer-1/0', got {scope_id!r}"
                    ) from None
                si, se = rec.slot_deltas.get(key, (0.0, 0.0))
                ingress += si
                egress += se
            else:
                raise TelemetryError("UNKNOWN_SCOPE", f"no scope {scope!r}")
        span = end - start
        rate = (ingress + egress) / span / 1e9 if span > 0 else 0.0
        return {
            "run_id": run_id,
            "scope": scope,
            "scope_id": scope_id,
            "window": [start, end],
            "ingress_bytes": ingress,
            "egress_bytes": egress,
            "mean_gbps": rate,
        }

    def counters_csv(self, run_id: str) -> str:
        run = self._run(run_id)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["port", "window_start", "window_end", "ingress_bytes", "egress_bytes", "errors"])
        for port in sorted(run.ports):
            c = run.ports[port]
            w.writerow(
                [
                    c.port,
                    "0",
                    f"{run.clock_s:.9g}",
                    f"{c.ingress_bytes:.9g}",
                    f"{c.egress_bytes:.9g}",
                    c.errors,
                ]
            )
        return buf.getvalue()

    # -- persistence -----------------------------------------------------

    def to_state(self) -> dict:
        return {
            run_id: {
                "workload": r.workload,
                "strategy": r.strategy,
                "revision": r.revision,
                "clock_s": r.clock_s,
                "ports": {
                    p: {
                        "drawer": c.drawer,
                        "ingress_bytes": c.ingress_bytes,
                        "egress_bytes": c.egress_bytes,
                        "errors": c.errors,
                    }
                    for p, c in r.ports.items()
                },
                "slots": {f"{d}/{s}": v for (d, s), v in r.slots.items()},
                "steps": [
                    {
                        "index": rec.index,
                        "t_start": rec.t_start,
                        "t_end": rec.t_end,
                        "port_deltas": {p: list(v) for p, v in rec.port_deltas.items()},
                        "slot_deltas": {f"{d}/{s}": list(v) for (d, s), v in rec.slot_deltas.items()},
                        "bytes_crossing": rec.bytes_crossing,
                    }
                    for rec in r.steps
                ],
            }
            for run_id, r in self._runs.items()
        }

    @classmethod
    def from_state(cls, state: dict) -> "TelemetryStore":
        store = cls()
        for run_id, raw in state.items():
            run = _Run(
                run_id=run_id,
                workload=raw["workload"],
                strategy=raw["strategy"],
                revision=raw["revision"],
                clock_s=raw["clock_s"],
            )
            for p, c in raw["ports"].items():
                run.ports[p] = PortCounters(
                    port=p,
                    drawer=c["drawer"],
                    ingress_bytes=c["ingress_bytes"],
                    egress_bytes=c["egress_bytes"],
                    errors=c["errors"],
                )
            for key, v in raw["slots"].items():
                d, s = key.rsplit("/", 1)
                run.slots[(d, int(s))] = list(v)
            for rec in raw["steps"]:
                run.steps.append(
                    _StepRecord(
                        index=rec["index"],
                        t_start=rec["t_start"],
                        t_end=rec["t_end"],
                        port_deltas={p: tuple(v) for p, v in rec["port_deltas"].items()},
                        slot_deltas={
                            (k.rsplit("/", 1)[0], int(k.rsplit("/", 1)[1])): tuple(v)
                            for k, v in rec["slot_deltas"].items()
                        },
                        bytes_crossing=rec["bytes_crossing"],
                    )
                )
            store._runs[run_id] = run
        return store


# -- event log -----------------------------------------------------------


@dataclass(frozen=True)
class EventRecord:
    seq: int
    timestamp: str
    actor: str
    action: str
    subjects: tuple
    outcome: str  # "ok" or an error code


class EventLog:
    def __init__(self):
        self._events: list[EventRecord] = []

    def append(self, actor: str, action: str, subjects, outcome: str = "ok") -> EventRecord:
        if action not in EVENT_ACTIONS:
            raise TelemetryError("UNKNOWN_SCOPE", f"no event action {action!r}")
        record = EventRecord(
            seq=len(self._events) + 1,
            timestamp=datetime.now(timezone.utc).isoformat(),
            actor=actor,
            action=action,
            subjects=tuple(subjects),
            outcome=outcome,
        )
        self._events.append(record)
        return record

    def __len__(self):
        return len(self._events)

    def records(self, action: str | None = None, actor: str | None = None):
        out = list(self._events)
        if action is not None:
            out = [e for e in out if e.action == action]
        if actor is not None:
            out = [e for e in out if e.actor == actor]
        return out

    def export(
        self, *, admin: bool, action: str | None = None, actor: str | None = None, fmt: str = "text"
    ) -> str:
        """Admin-only export of the management audit trail."""
        if not admin:
            raise TelemetryError("FORBIDDEN", "event export is an administrator action")
        events = self.records(action=action, actor=actor)
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["seq", "timestamp", "actor", "action", "subjects", "outcome"])
            for e in events:
                w.writerow([e.seq, e.timestamp, e.actor, e.action, " ".join(e.subjects), e.outcome])
            return buf.getvalue()
        return "\n".join(
            f"[{e.seq}] {e.timestamp} {e.actor} {e.action} {' '.join(e.subjects)} -> {e.outcome}"
            for e in events
        ) + ("\n" if events else "")

    def to_state(self) -> list:
        return [
            {
                "seq": e.seq,
                "timestamp": e.timestamp,
                "actor": e.actor,
                "action": e.action,
                "subjects": list(e.subjects),
                "outcome": e.outcome,
            }
            for e in self._events
        ]

    @classmethod
    def from_state(cls, state: list) -> "EventLog":
        log = cls()
        for raw in state:
            log._events.append(
                EventRecord(
                    seq=raw["seq"],
                    timestamp=raw["timestamp"],
                    actor=raw["actor"],
                    action=raw["action"],
                    subjects=tuple(raw["subjects"]),
                    outcome=raw["outcome"],
                )
            )
        return log
