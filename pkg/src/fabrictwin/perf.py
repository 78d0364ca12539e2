"""Analytical performance model for data-parallel training on a composition.

A training step is modeled as three overlappable phases:

* load    - read one global batch from the resolved storage device and
            preprocess it (fixed CPU cost per sample, no scheduler model);
* compute - calibrated forward+backward time per step for the precision;
* comm    - gradient synchronization over the composition's actual links.

With the default prefetching loader the loader works one batch ahead, so
``total = max(load, compute + comm)``; a sequential pipeline flag reverts to
the plain sum.

Gradient synchronization follows the standard cost model.  For ring
all-reduce (DDP) over n GPUs with S gradient bytes::

    t = 2 * (n-1)/n * S / bw  +  2 * (n-1) * lat        (0 when n == 1)

where bw is the bottleneck link bandwidth along the ring and lat the
slowest hop latency.  Single-process data parallel (DP) serializes the
broadcast and reduce through the master GPU's links::

    t = 2 * (n-1) * (S / bw + lat)

which is never faster than the ring for the same bandwidth.  Mixed
precision halves S (2 bytes per gradient instead of 4).

Traffic accounting counts only ring hops that traverse a chassis host
port: each directed ring edge carries 2*(n-1)*S/n bytes per step, and a
hop contributes that volume once per port it crosses (a drawer-to-drawer
hop bridges through the host and crosses two ports).  The reported
pcie-traffic rate is this crossing volume divided by the step time, which
is zero for all-local rings by construction.

The memory model prices a parameter at 16 bytes (weights + gradients +
optimizer moments, mixed-precision layout); sharding divides the gradient
and optimizer share by the rank count.  A fixed framework reserve and a
calibrated per-sample activation footprint complete the feasible-batch
rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .composition import Composition
from .errors import PerfError
from .fabric import (
    HOST_NVME_FALCON,
    HOST_NVME_LOCAL,
    LinkPath,
    Topology,
    path_metrics,
    port_crossings,
    route,
    with_link_classes,
)
from .workloads import Parallelism, Precision, Strategy, WorkloadSpec

GB = 1e9  # decimal, matches link-class bandwidth units
GIB = 2**30


@dataclass(frozen=True)
class StorageProfile:
    name: str
    read_gbps: float
    latency_s: float  # per-step request overhead


@dataclass(frozen=True)
class PerfConfig:
    pipeline: str = "overlapped"  # overlapped | sequential
    base_storage: StorageProfile = StorageProfile("base", 0.5, 100e-6)
    # memory model
    gpu_reserve_bytes: float = 4.8e9  # framework + CUDA context + fragmentation
    param_bytes: dict = field(
        default_factory=lambda: {
            # precision -> (weights, gradients, optimizer) bytes per parameter
            Precision.FP16_MIXED.value: (2, 2, 12),
            Precision.FP32.value: (4, 4, 8),
        }
    )


DEFAULT_PERF_CONFIG = PerfConfig()


@dataclass(frozen=True)
class StepBreakdown:
    load_s: float
    compute_s: float
    comm_s: float
    total_s: float
    bytes_crossing_falcon_ports: float


@dataclass(frozen=True)
class PerfEstimate:
    workload: str
    strategy: Strategy
    n_gpus: int
    step: StepBreakdown
    steps_per_epoch: int
    epoch_s: float
    total_s: float
    pcie_traffic_gbps: float
    gpu_util: float  # compute share of the step, a utilization proxy
    label: str | None = None


# -- pure cost formulas --------------------------------------------------


def gradient_bytes(workload: WorkloadSpec, precision: Precision) -> float:
    """Synchronized gradient volume per step: 4 B/param FP32, 2 B mixed."""
    per_param = 2 if Precision(precision) is Precision.FP16_MIXED else 4
    return float(workload.parameter_count * per_param)


def allreduce_time(n_gpus: int, nbytes: float, bandwidth_gbps: float, latency_us: float) -> float:
    """Ring all-reduce seconds; exact 0 for a single GPU."""
    if n_gpus <= 1:
        return 0.0
    return 2 * (n_gpus - 1) / n_gpus * nbytes / (bandwidth_gbps * GB) + 2 * (n_gpus - 1) * (
        latency_us * 1e-6
    )


def dp_sync_time(
    n_gpus: int, nbytes: float, master_bandwidth_gbps: float, latency_us: float = 0.0
) -> float:
    """Master-serialized broadcast+reduce seconds; exact 0 for a single GPU."""
    if n_gpus <= 1:
        return 0.0
    return 2 * (n_gpus - 1) * (nbytes / (master_bandwidth_gbps * GB) + latency_us * 1e-6)


def steps_per_epoch(workload: WorkloadSpec, n_gpus: int) -> int:
    return math.ceil(workload.dataset.sample_count / (workload.per_gpu_batch * n_gpus))


# -- composition introspection -------------------------------------------


def effective_topology(comp: Composition) -> Topology:
    if comp.link_overrides:
        return with_link_classes(comp.topology, comp.link_overrides)
    return comp.topology


def simulated_host(comp: Composition, host_id: str | None = None) -> str:
    """The host whose training job is being modeled."""
    if host_id is not None:
        comp.topology.host(host_id)
        return host_id
    owners = sorted(
        {o.host for d, o in comp.ownership.items() if comp.topology.device(d).kind == "GPU"}
    )
    if not owners:
        raise PerfError("INSUFFICIENT_RESOURCES", "no host owns any GPU in this composition")
    if len(owners) > 1:
        raise PerfError(
            "INSUFFICIENT_RESOURCES", f"multiple hosts own GPUs ({owners}); pass host_id"
        )
    return owners[0]


def gpu_roster(comp: Composition, host_id: str):
    """The host's GPUs in ring order: local first, then falcon grouped by
    drawer and slot.  This keeps fabric-crossing ring hops to the minimum
    (exactly two per drawer boundary)."""
    topo = comp.topology
    local, falcon = [], []
    for dev_id in comp.owned_by(host_id):
        dev = topo.device(dev_id)
        if dev.kind != "GPU":
            continue
        drawer = topo.drawer_of(dev_id)
        if drawer is None:
            local.append(dev_id)
        else:
            falcon.append((drawer, topo.slot_of(dev_id), dev_id))
    return sorted(local) + [d for _, _, d in sorted(falcon)]


@dataclass(frozen=True)
class RingPlan:
    roster: tuple
    hops: tuple  # (src, dst, LinkPath) per ring edge
    bottleneck_gbps: float
    hop_latency_us: float  # slowest hop (path latency, summed over segments)
    port_traversal_count: int


def ring_plan(comp: Composition, host_id: str | None = None) -> RingPlan:
    topo = effective_topology(comp)
    host = simulated_host(comp, host_id)
    roster = gpu_roster(comp, host)
    if not roster:
        raise PerfError("INSUFFICIENT_RESOURCES", f"host {host} owns no GPUs")
    if len(roster) == 1:
        return RingPlan(tuple(roster), (), math.inf, 0.0, 0)
    hops = []
    traversals = 0
    bw = math.inf
    lat = 0.0
    for i, src in enumerate(roster):
        dst = roster[(i + 1) % len(roster)]
        path = route(topo, src, dst)
        hop_bw, hop_lat = path_metrics(path)
        bw = min(bw, hop_bw)
        lat = max(lat, hop_lat)
        traversals += len(port_crossings(topo, path))
        hops.append((src, dst, path))
    return RingPlan(tuple(roster), tuple(hops), bw, lat, traversals)


def crossing_traversals(comp: Composition, host_id: str | None = None):
    """Port traversals of the ring schedule, for telemetry apportionment.

    Returns (n_gpus, records) where each record is (port, drawer,
    direction, device): the device is the ring-edge source for egress and
    the destination for ingress.  Every record carries an equal share of
    the step's crossing bytes.
    """
    plan = ring_plan(comp, host_id)
    topo = effective_topology(comp)
    records = []
    for src, dst, path in plan.hops:
        for port, drawer, direction in port_crossings(topo, path):
            dev = src if direction == "out" else dst
            records.append((port, drawer, direction, dev))
    return len(plan.roster), records


def _resolve_storage(comp: Composition, host_id: str, config: PerfConfig) -> StorageProfile:
    topo = effective_topology(comp)
    falcon_nvme = None
    local_nvme = None
    for dev_id in comp.owned_by(host_id):
        if topo.device(dev_id).kind != "NVME":
            continue
        if topo.drawer_of(dev_id) is not None:
            falcon_nvme = dev_id
        else:
            local_nvme = dev_id
    if falcon_nvme is not None:
        lc = topo.link(HOST_NVME_FALCON)
        return StorageProfile("nvme_falcon", lc.bandwidth_gbps, lc.latency_us * 1e-6)
    if local_nvme is not None:
        lc = topo.link(HOST_NVME_LOCAL)
        return StorageProfile("nvme_local", lc.bandwidth_gbps, lc.latency_us * 1e-6)
    return config.base_storage


def load_time(
    workload: WorkloadSpec, n_gpus: int, storage: StorageProfile
) -> float:
    global_batch = workload.per_gpu_batch * n_gpus
    read_s = global_batch * workload.dataset.bytes_per_sample / (storage.read_gbps * GB)
    preprocess_s = global_batch * workload.preprocess_us_per_sample * 1e-6
    return read_s + storage.latency_s + preprocess_s


# -- memory model --------------------------------------------------------


def feasible_batch(
    workload: WorkloadSpec,
    gpu_memory_gib: float,
    strategy: Strategy,
    n_gpus: int = 1,
    config: PerfConfig = DEFAULT_PERF_CONFIG,
) -> int:
    """Largest per-GPU batch that fits, or NO_FEASIBLE_BATCH if none does."""
    weights, grads, optim = config.param_bytes[Strategy(strategy).precision.value]
    shared = grads + optim
    if strategy.sharded and n_gpus > 1:
        shared = shared / n_gpus
    state_bytes = workload.parameter_count * (weights + shared)
    budget = gpu_memory_gib * GIB - config.gpu_reserve_bytes - state_bytes
    per_sample = workload.activation_bytes_per_sample
    if per_sample <= 0:
        raise PerfError("NO_FEASIBLE_BATCH", f"{workload.key} has no activation footprint set")
    batch = math.floor(budget / per_sample)
    if batch < 1:
        raise PerfError(
            "NO_FEASIBLE_BATCH",
            f"{workload.key} does not fit a single sample in {gpu_memory_gib} GiB "
            f"({strategy.key()}, n={n_gpus})",
        )
    return batch


# -- the step model ------------------------------------------------------


def step_time(
    workload: WorkloadSpec,
    comp: Composition,
    strategy: Strategy = Strategy(),
    host_id: str | None = None,
    config: PerfConfig = DEFAULT_PERF_CONFIG,
) -> StepBreakdown:
    precision = strategy.precision
    if not workload.calibrated(precision):
        raise PerfError(
            "NOT_CALIBRATED", f"{workload.key} has no compute time for {precision.value}"
        )
    host = simulated_host(comp, host_id)
    plan = ring_plan(comp, host)
    n = len(plan.roster)
    topo = effective_topology(comp)

    gpu_mems = [topo.device(d).memory_gib for d in plan.roster]
    gpu_mem = min(m for m in gpu_mems) if gpu_mems else 0.0
    if gpu_mem > 0:
        limit = feasible_batch(workload, gpu_mem, strategy, n_gpus=n, config=config)
        if workload.per_gpu_batch > limit:
            raise PerfError(
                "INFEASIBLE_BATCH",
                f"{workload.key} batch {workload.per_gpu_batch} exceeds feasible {limit} "
                f"in {gpu_mem} GiB ({strategy.key()}, n={n})",
            )

    storage = _resolve_storage(comp, host, config)
    load_s = load_time(workload, n, storage)
    compute_s = workload.compute_step_s[precision.value]
    grad = gradient_bytes(workload, precision)

    if n == 1:
        comm_s = 0.0
        crossing = 0.0
    elif strategy.parallelism is Parallelism.DDP:
        comm_s = allreduce_time(n, grad, plan.bottleneck_gbps, plan.hop_latency_us)
        per_edge = 2 * (n - 1) * grad / n
        crossing = plan.port_traversal_count * per_edge
    else:  # DP: serialized through the master GPU's links
        master = plan.roster[0]
        bw = math.inf
        lat = 0.0
        crossing = 0.0
        for peer in plan.roster[1:]:
            path = route(topo, master, peer)
            p_bw, p_lat = path_metrics(path)
            bw = min(bw, p_bw)
            lat = max(lat, p_lat)
            crossing += len(port_crossings(topo, path)) * 2 * grad
        comm_s = dp_sync_time(n, grad, bw, lat)

    busy = compute_s + comm_s
    total = max(load_s, busy) if config.pipeline == "overlapped" else load_s + busy
    return StepBreakdown(
        load_s=load_s,
        compute_s=compute_s,
        comm_s=comm_s,
        total_s=total,
        bytes_crossing_falcon_ports=crossing,
    )


def training_time(
    workload: WorkloadSpec,
    comp: Composition,
    strategy: Strategy = Strategy(),
    host_id: str | None = None,
    config: PerfConfig = DEFAULT_PERF_CONFIG,
    label: str | None = None,
) -> PerfEstimate:
    host = simulated_host(comp, host_id)
    step = step_time(workload, comp, strategy, host, config)
    n = len(gpu_roster(comp, host))
    spe = steps_per_epoch(workload, n)
    epoch_s = spe * step.total_s
    return PerfEstimate(
        workload=workload.key,
        strategy=strategy,
        n_gpus=n,
        step=step,
        steps_per_epoch=spe,
        epoch_s=epoch_s,
        total_s=workload.epochs * epoch_s,
        pcie_traffic_gbps=step.bytes_crossing_falcon_ports / step.total_s / GB,
        gpu_util=step.compute_s / step.total_s,
        label=label,
    )


def relative_change(estimate: PerfEstimate, baseline: PerfEstimate) -> float:
    """Percent change in end-to-end time against a baseline estimate."""
    return 100.0 * (estimate.total_s - baseline.total_s) / baseline.total_s


def estimate_as_dict(est: PerfEstimate) -> dict:
    """JSON-ready view of an estimate (CLI and service share this shape)."""
    return {
        "workload": est.workload,
        "label": est.label,
        "strategy": {
            "parallelism": est.strategy.parallelism.value,
            "precision": est.strategy.precision.value,
            "sharded": est.strategy.sharded,
        },
        "n_gpus": est.n_gpus,
        "step": {
            "load_s": est.step.load_s,
            "compute_s": est.step.compute_s,
            "comm_s": est.step.comm_s,
            "total_s": est.step.total_s,
            "bytes_crossing_falcon_ports": est.step.bytes_crossing_falcon_ports,
        },
        "steps_per_epoch": est.steps_per_epoch,
        "epoch_s": est.epoch_s,
        "total_s": est.total_s,
        "pcie_traffic_gbps": est.pcie_traffic_gbps,
        "gpu_util": est.gpu_util,
    }


def storage_effect(
    workload: WorkloadSpec,
    comp: Composition,
    strategy: Strategy = Strategy(),
    host_id: str | None = None,
    config: PerfConfig = DEFAULT_PERF_CONFIG,
) -> StepBreakdown:
    """Step delta of this composition against the same GPUs on base storage.

    Only the load phase can differ, so compute/comm deltas are zero and the
    total delta is non-zero exactly when the loader was (or becomes) the
    pipeline bottleneck.
    """
    host = simulated_host(comp, host_id)
    with_storage = step_time(workload, comp, strategy, host, config)
    stripped = dict(comp.ownership)
    for dev_id in list(stripped):
        if comp.topology.device(dev_id).kind == "NVME":
            del stripped[dev_id]
    base = Composition(
        topology=comp.topology,
        modes=dict(comp.modes),
        ownership=stripped,
        revision=comp.revision,
        link_overrides=dict(comp.link_overrides),
    )
    base_step = step_time(workload, base, strategy, host, config)
    return StepBreakdown(
        load_s=with_storage.load_s - base_step.load_s,
        compute_s=with_storage.compute_s - base_step.compute_s,
        comm_s=with_storage.comm_s - base_step.comm_s,
        total_s=with_storage.total_s - base_step.total_s,
        bytes_crossing_falcon_ports=with_storage.bytes_crossing_falcon_ports
        - base_step.bytes_crossing_falcon_ports,
    )


# -- sweeps --------------------------------------------------------------

SWEEP_COLUMNS = (
    "workload",
    "config",
    "strategy",
    "load_s",
    "compute_s",
    "comm_s",
    "total_s",
    "epoch_s",
    "traffic_GBps",
)


def sweep_rows(workload_specs, labels, build_composition, strategy: Strategy = Strategy(),
               config: PerfConfig = DEFAULT_PERF_CONFIG):
    """Cartesian sweep producing stable CSV-ready rows.

    ``build_composition(label)`` maps a configuration label to a
    Composition; rows come out in (workload, label) iteration order with
    deterministic number formatting.
    """
    rows = []
    for key, workload in workload_specs.items():
        for label in labels:
            comp = build_composition(label)
            est = training_time(workload, comp, strategy, config=config, label=label)
            rows.append(
                {
                    "workload": key,
                    "config": label,
                    "strategy": strategy.key(),
                    "load_s": _fmt(est.step.load_s),
                    "compute_s": _fmt(est.step.compute_s),
                    "comm_s": _fmt(est.step.comm_s),
                    "total_s": _fmt(est.total_s),
                    "epoch_s": _fmt(est.epoch_s),
                    "traffic_GBps": _fmt(est.pcie_traffic_gbps),
                }
            )
    return rows


def _fmt(value: float) -> str:
    return f"{value:.9g}"
