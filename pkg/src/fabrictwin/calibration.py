"""Calibration of per-step compute time and validation against anchors.

The plant's instrumentation gives relative numbers (slowdowns, traffic
rates, ratios) rather than absolute step times, so the shipped baselines
are synthetic: generated by the model itself at the published anchors and
marked DERIVED in the data file.  ``calibrate`` inverts the step model on a
baseline measured with all-local GPUs: under the overlapped pipeline the
step total equals compute + comm whenever the loader is not the
bottleneck, so

    compute = baseline_total - modeled_comm(local ring)

The preconditions reject baselines the inversion cannot explain: a total
below the communication floor, or one the modeled loader would cover
(UNCALIBRATABLE either way).  Baselines are therefore taken with NVMe
storage, where the loader never dominates.

``validate_against_reference`` replays every shipped anchor against model
outputs and reports per-anchor residuals; speedups are reported as
percentage gains (t_slow / t_fast - 1) * 100.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

from .composition import Composition, apply_named_configuration, attach, new_composition
from .errors import CalibrationError
from .fabric import Topology, build_reference_topology
from .perf import (
    DEFAULT_PERF_CONFIG,
    PerfConfig,
    allreduce_time,
    feasible_batch,
    gradient_bytes,
    load_time,
    ring_plan,
    training_time,
    _resolve_storage,
)
from .workloads import Parallelism, Precision, Strategy, WorkloadSpec, load_workloads, _load_json


@dataclass(frozen=True)
class ReferenceAnchor:
    id: str
    description: str
    metric: str
    kind: str  # ratio | absolute | bound
    expected: float
    tolerance: float
    params: dict
    source: str
    comparison: str = ""  # lt | gt, for kind == bound

    def __post_init__(self):
        if not self.tolerance > 0:
            raise CalibrationError("SCHEMA_ERROR", f"anchor {self.id}: tolerance must be > 0")
        if not self.source:
            raise CalibrationError("SCHEMA_ERROR", f"anchor {self.id}: source required")


@dataclass(frozen=True)
class CalibrationResult:
    workload: str
    compute_step_s: dict  # precision value -> seconds
    activation_bytes_per_sample: float
    residuals: dict = field(default_factory=dict)  # anchor id -> relative error


@dataclass(frozen=True)
class AnchorResult:
    anchor: ReferenceAnchor
    actual: float
    error: float  # relative for ratio/absolute, signed slack for bounds
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    results: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(
                f"{status} {r.anchor.id}: expected {r.anchor.expected:g} "
                f"({r.anchor.kind}{'/' + r.anchor.comparison if r.anchor.comparison else ''}, "
                f"tol {r.anchor.tolerance:g}), modeled {r.actual:.6g}, error {r.error:+.3%}"
            )
        lines.append(f"{'PASS' if self.passed else 'FAIL'} overall: "
                     f"{sum(r.passed for r in self.results)}/{len(self.results)} anchors")
        return "\n".join(lines)

    def to_csv(self) -> str:
        import csv

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["anchor", "kind", "expected", "tolerance", "actual", "error", "passed"])
        for r in self.results:
            w.writerow(
                [
                    r.anchor.id,
                    r.anchor.kind,
                    f"{r.anchor.expected:g}",
                    f"{r.anchor.tolerance:g}",
                    f"{r.actual:.9g}",
                    f"{r.error:.9g}",
                    str(r.passed).lower(),
                ]
            )
        return buf.getvalue()


# -- calibration ---------------------------------------------------------


def _local_baseline_composition(
    topology: Topology, n_gpus: int, storage: str
) -> Composition:
    host = topology.hosts[0]
    if len(host.local_gpus) < n_gpus:
        raise CalibrationError(
            "UNCALIBRATABLE", f"host {host.id} has {len(host.local_gpus)} local GPUs, need {n_gpus}"
        )
    comp = new_composition(topology)
    for gpu in sorted(host.local_gpus)[:n_gpus]:
        comp = attach(comp, gpu, host.id, "calibration")
    if storage == "nvme_local":
        if not host.local_nvme:
            raise CalibrationError("UNCALIBRATABLE", f"host {host.id} has no local NVMe")
        comp = attach(comp, host.local_nvme, host.id, "calibration")
    elif storage != "base":
        raise CalibrationError("SCHEMA_ERROR", f"unknown baseline storage {storage!r}")
    return comp


def calibrate(
    workload: WorkloadSpec,
    baseline_step_s: float,
    precision: Precision = Precision.FP16_MIXED,
    topology: Topology | None = None,
    n_gpus: int = 8,
    storage: str = "nvme_local",
    parallelism: Parallelism = Parallelism.DDP,
    config: PerfConfig = DEFAULT_PERF_CONFIG,
) -> float:
    """Per-step compute seconds recovered from an all-local baseline."""
    if baseline_step_s <= 0:
        raise CalibrationError("UNCALIBRATABLE", "baseline step time must be > 0")
    topology = topology or build_reference_topology()
    comp = _local_baseline_composition(topology, n_gpus, storage)
    host = topology.hosts[0].id
    plan = ring_plan(comp, host)
    grad = gradient_bytes(workload, precision)
    if len(plan.roster) <= 1:
        comm = 0.0
    elif Parallelism(parallelism) is Parallelism.DDP:
        comm = allreduce_time(len(plan.roster), grad, plan.bottleneck_gbps, plan.hop_latency_us)
    else:
        raise CalibrationError("UNCALIBRATABLE", "baselines must use ring all-reduce")
    load = load_time(workload, len(plan.roster), _resolve_storage(comp, host, config))
    if baseline_step_s <= comm:
        raise CalibrationError(
            "UNCALIBRATABLE",
            f"{workload.key}: baseline {baseline_step_s}s is below the "
            f"communication floor {comm:.6g}s",
        )
    if baseline_step_s <= load:
        raise CalibrationError(
            "UNCALIBRATABLE",
            f"{workload.key}: baseline {baseline_step_s}s is loader-bound "
            f"(modeled load {load:.6g}s); use faster baseline storage",
        )
    return baseline_step_s - comm


def load_baselines() -> dict:
    return _load_json("baselines.json")


def default_calibrated_workloads(
    topology: Topology | None = None, config: PerfConfig = DEFAULT_PERF_CONFIG
) -> dict:
    """Workload specs with compute times from the shipped baselines."""
    topology = topology or build_reference_topology()
    baselines = load_baselines()
    settings = baselines["settings"]
    specs = load_workloads()
    out = {}
    for key, spec in specs.items():
        per_precision = baselines["step_seconds"][key]
        for precision_name, step_s in per_precision.items():
            precision = Precision(precision_name)
            compute = calibrate(
                spec,
                step_s,
                precision=precision,
                topology=topology,
                n_gpus=settings["n_gpus"],
                storage=settings["storage"],
                parallelism=Parallelism(settings["parallelism"]),
                config=config,
            )
            spec = spec.with_compute(precision, compute)
        out[key] = spec
    return out


def calibration_results(topology: Topology | None = None) -> dict:
    specs = default_calibrated_workloads(topology)
    return {
        key: CalibrationResult(
            workload=key,
            compute_step_s=dict(spec.compute_step_s),
            activation_bytes_per_sample=spec.activation_bytes_per_sample,
        )
        for key, spec in specs.items()
    }


# -- anchors -------------------------------------------------------------


def load_anchors(path: str | None = None) -> list:
    if path is None:
        raw = _load_json("anchors.json")
    else:
        with open(path) as f:
            raw = json.load(f)
    return [
        ReferenceAnchor(
            id=row["id"],
            description=row.get("description", ""),
            metric=row["metric"],
            kind=row["kind"],
            expected=row["expected"],
            tolerance=row["tolerance"],
            params=row.get("params", {}),
            source=row["source"],
            comparison=row.get("comparison", ""),
        )
        for row in raw["anchors"]
    ]


@dataclass
class ReferenceOutputs:
    """Model outputs the anchor metrics draw from."""

    estimates: dict  # (workload, label, strategy key) -> PerfEstimate
    batches: dict  # (workload, gib, n_gpus, strategy key) -> int

    def estimate(self, workload, label, strategy: Strategy):
        key = (workload, label, strategy.key())
        if key not in self.estimates:
            raise CalibrationError("MISSING_ESTIMATE", f"no estimate for {key}")
        return self.estimates[key]

    def batch(self, workload, gib, n_gpus, strategy: Strategy):
        key = (workload, gib, n_gpus, strategy.key())
        if key not in self.batches:
            raise CalibrationError("MISSING_ESTIMATE", f"no feasible-batch result for {key}")
        return self.batches[key]


ANCHOR_LABELS = ("localGPUs", "hybridGPUs", "falconGPUs", "localNVMe", "falconNVMe")
ANCHOR_STRATEGIES = (
    Strategy(Parallelism.DDP, Precision.FP16_MIXED),
    Strategy(Parallelism.DDP, Precision.FP32),
    Strategy(Parallelism.DP, Precision.FP16_MIXED),
)


def compute_reference_outputs(
    topology: Topology | None = None,
    workloads: dict | None = None,
    config: PerfConfig = DEFAULT_PERF_CONFIG,
) -> ReferenceOutputs:
    topology = topology or build_reference_topology()
    specs = workloads or default_calibrated_workloads(topology, config)
    estimates = {}
    for label in ANCHOR_LABELS:
        comp = apply_named_configuration(topology, label)
        for key, spec in specs.items():
            for strategy in ANCHOR_STRATEGIES:
                est = training_time(spec, comp, strategy, config=config, label=label)
                estimates[(key, label, strategy.key())] = est
    batches = {}
    for sharded in (False, True):
        strategy = Strategy(Parallelism.DDP, Precision.FP16_MIXED, sharded=sharded)
        for key, spec in specs.items():
            batches[(key, 16, 8, strategy.key())] = feasible_batch(
                spec, 16, strategy, n_gpus=8, config=config
            )
    return ReferenceOutputs(estimates=estimates, batches=batches)


def _strategy_from(params: dict, **overrides) -> Strategy:
    merged = {
        "parallelism": params.get("parallelism", "DDP"),
        "precision": params.get("precision", "FP16_MIXED"),
        "sharded": params.get("sharded", False),
    }
    merged.update(overrides)
    return Strategy(
        Parallelism(merged["parallelism"]),
        Precision(merged["precision"]),
        bool(merged["sharded"]),
    )


def _evaluate_metric(anchor: ReferenceAnchor, outputs: ReferenceOutputs) -> float:
    p = anchor.params
    metric = anchor.metric
    if metric == "total_ratio":
        s = _strategy_from(p)
        est = outputs.estimate(p["workload"], p["label"], s)
        base = outputs.estimate(p["workload"], p["baseline_label"], s)
        return est.total_s / base.total_s
    if metric == "max_slowdown_pct":
        s = _strategy_from(p)
        worst = 0.0
        for workload in p["workloads"]:
            base = outputs.estimate(workload, p["baseline_label"], s)
            for label in p["labels"]:
                est = outputs.estimate(workload, label, s)
                worst = max(worst, 100.0 * (est.total_s / base.total_s - 1.0))
        return worst
    if metric == "traffic_ratio":
        s = _strategy_from(p)
        est = outputs.estimate(p["workload"], p["label"], s)
        base = outputs.estimate(p["baseline_workload"], p["label"], s)
        return est.pcie_traffic_gbps / base.pcie_traffic_gbps
    if metric == "traffic_abs":
        s = _strategy_from(p)
        return outputs.estimate(p["workload"], p["label"], s).pcie_traffic_gbps
    if metric == "feasible_batch":
        s = _strategy_from(p)
        return float(outputs.batch(p["workload"], p["gpu_memory_gib"], p["n_gpus"], s))
    if metric == "min_fp16_speedup_pct":
        best = None
        for label in p["labels"]:
            fast = outputs.estimate(p["workload"], label, _strategy_from(p, precision="FP16_MIXED"))
            slow = outputs.estimate(p["workload"], label, _strategy_from(p, precision="FP32"))
            gain = 100.0 * (slow.total_s / fast.total_s - 1.0)
            best = gain if best is None else min(best, gain)
        return best
    if metric == "ddp_speedup_pct":
        fast = outputs.estimate(p["workload"], p["label"], _strategy_from(p, parallelism="DDP"))
        slow = outputs.estimate(p["workload"], p["label"], _strategy_from(p, parallelism="DP"))
        return 100.0 * (slow.total_s / fast.total_s - 1.0)
    raise CalibrationError("SCHEMA_ERROR", f"anchor {anchor.id}: unknown metric {metric!r}")


def validate_against_reference(
    anchors: list | None = None, outputs: ReferenceOutputs | None = None
) -> ValidationReport:
    anchors = anchors if anchors is not None else load_anchors()
    if not anchors:
        return ValidationReport(results=())  # vacuously passing
    outputs = outputs or compute_reference_outputs()
    results = []
    for anchor in anchors:
        actual = _evaluate_metric(anchor, outputs)
        if anchor.kind in ("ratio", "absolute"):
            error = actual / anchor.expected - 1.0
            passed = abs(error) <= anchor.tolerance
        elif anchor.kind == "bound" and anchor.comparison == "lt":
            error = (actual - anchor.expected) / anchor.expected
            passed = actual < anchor.expected + anchor.tolerance
        elif anchor.kind == "bound" and anchor.comparison == "gt":
            error = (actual - anchor.expected) / anchor.expected
            passed = actual > anchor.expected - anchor.tolerance
        else:
            raise CalibrationError(
                "SCHEMA_ERROR", f"anchor {anchor.id}: unknown kind {anchor.kind!r}"
            )
        results.append(AnchorResult(anchor=anchor, actual=actual, error=error, passed=passed))
    return ValidationReport(results=tuple(results))
