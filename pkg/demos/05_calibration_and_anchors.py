"""
Calibration and the reference anchors
=====================================

The model carries one free parameter per workload and precision: the
pure compute time of a step.  Calibration recovers it by inverting the
step model against a measured baseline (8 local GPUs, local NVMe).  The
anchor suite then replays the published observations - slowdown ratios,
traffic ratios, batch sizes, optimization speedups - and checks the
calibrated model lands inside every stated tolerance.
"""

from fabrictwin import (
    Precision,
    calibrate,
    default_calibrated_workloads,
    build_reference_topology,
    load_anchors,
    validate_against_reference,
)
from fabrictwin.calibration import calibration_results, load_baselines

topo = build_reference_topology()

# what the fit recovers from the shipped baseline step times
baselines = load_baselines()
print(f"baseline settings: {baselines['settings']}")
print(f"{'workload':<12} {'fp16 step s':>12} {'-> compute ms':>14} {'fp32 step s':>12} {'-> compute ms':>14}")
results = calibration_results(topo)
for key, result in results.items():
    steps = baselines["step_seconds"][key]
    fp16 = result.compute_step_s[Precision.FP16_MIXED.value]
    fp32 = result.compute_step_s[Precision.FP32.value]
    print(
        f"{key:<12} {steps['FP16_MIXED']:>12.4f} {fp16 * 1e3:>14.3f} "
        f"{steps['FP32']:>12.4f} {fp32 * 1e3:>14.3f}"
    )

# the communication and loader shares explain the difference between a
# measured step and the fitted compute kernel; a baseline that the model
# cannot explain (shorter than its own comm floor) is refused outright
wl = default_calibrated_workloads(topo)["bert-l"]
refit = calibrate(wl, 0.0442, Precision.FP16_MIXED, topo)
print(f"\nrefit of the shipped BERT-L baseline: {refit * 1e3:.3f} ms compute")

# replay all reference observations
report = validate_against_reference()
print(f"\n{len(load_anchors())} anchors:")
print(report.to_text())
