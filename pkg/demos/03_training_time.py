"""
Predicting training time
========================

The model splits a training step into loader, compute, and gradient
synchronization, then rolls steps into epochs and full runs.  Compute
times come from the shipped calibration; communication falls out of the
ring-allreduce formula over the composed links.
"""

from fabrictwin import (
    Parallelism,
    Precision,
    Strategy,
    apply_named_configuration,
    build_reference_topology,
    default_calibrated_workloads,
    feasible_batch,
    relative_change,
    storage_effect,
    training_time,
)

topo = build_reference_topology()
workloads = default_calibrated_workloads(topo)
ddp16 = Strategy(Parallelism.DDP, Precision.FP16_MIXED)

# BERT-L is communication-heavy: watch what pooling the GPUs does to it
bert_l = workloads["bert-l"]
print(f"{'config':<12} {'load ms':>8} {'compute ms':>11} {'comm ms':>8} {'step ms':>8} {'epoch s':>8} {'GB/s':>7}")
local_est = None
for label in ("localGPUs", "hybridGPUs", "falconGPUs"):
    est = training_time(bert_l, apply_named_configuration(topo, label), ddp16)
    s = est.step
    print(
        f"{label:<12} {s.load_s * 1e3:>8.2f} {s.compute_s * 1e3:>11.2f} {s.comm_s * 1e3:>8.2f} "
        f"{s.total_s * 1e3:>8.2f} {est.epoch_s:>8.1f} {est.pcie_traffic_gbps:>7.2f}"
    )
    local_est = local_est or est
    if label != "localGPUs":
        print(f"{'':<12} -> {relative_change(est, local_est):+.1f}% vs localGPUs")

# vision models barely notice: their gradients are small next to their
# compute, so the slower fabric stays hidden behind the overlap
print()
for key in ("mobilenetv2", "resnet50", "yolov5l"):
    wl = workloads[key]
    local = training_time(wl, apply_named_configuration(topo, "localGPUs"), ddp16)
    falcon = training_time(wl, apply_named_configuration(topo, "falconGPUs"), ddp16)
    print(f"{key:<12} falcon vs local: {relative_change(falcon, local):+.2f}%")

# storage placement only moves the loader term.  YOLOv5-L reads the most
# bytes per step, so it is the one that notices which NVMe it gets.
print()
for key in ("yolov5l", "bert-l"):
    for label in ("localNVMe", "falconNVMe"):
        delta = storage_effect(workloads[key], apply_named_configuration(topo, label), ddp16)
        print(
            f"{key:<12} {label:<11} load {delta.load_s * 1e3:+.3f} ms, "
            f"step {delta.total_s * 1e3:+.3f} ms vs base storage"
        )

# memory feasibility: sharding the optimizer state frees enough of the
# 16 GiB card to lift BERT-L's per-GPU batch from 6 to 10
plain = feasible_batch(bert_l, 16, ddp16, n_gpus=8)
sharded = feasible_batch(bert_l, 16, Strategy(Parallelism.DDP, Precision.FP16_MIXED, sharded=True), n_gpus=8)
print(f"\nBERT-L feasible batch on 16 GiB: {plain} plain, {sharded} sharded")
