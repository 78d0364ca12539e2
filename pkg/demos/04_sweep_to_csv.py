"""
Sweeping the whole study grid
=============================

Every workload against every named configuration, one CSV row each -
the plot-ready form of the study.  Rows are pure functions of their
inputs, so the sweep is reproducible byte for byte.
"""

import csv
import io

from fabrictwin import (
    NAMED_CONFIGURATIONS,
    apply_named_configuration,
    build_reference_topology,
    default_calibrated_workloads,
    sweep_rows,
)
from fabrictwin.perf import SWEEP_COLUMNS

topo = build_reference_topology()
workloads = default_calibrated_workloads(topo)
labels = list(NAMED_CONFIGURATIONS)

rows = sweep_rows(workloads, labels, lambda label: apply_named_configuration(topo, label))
buf = io.StringIO()
writer = csv.DictWriter(buf, fieldnames=list(SWEEP_COLUMNS), lineterminator="\n")
writer.writeheader()
writer.writerows(rows)
print(buf.getvalue())

# the same grid falls out of the command line:
#   fabrictwin sweep --workloads all --configs localGPUs,hybridGPUs,falconGPUs --out sweep.csv
print(f"{len(rows)} rows ({len(workloads)} workloads x {len(labels)} configurations)")

# quick look at the traffic column: the NLP models dominate
by_traffic = sorted(rows, key=lambda r: float(r["traffic_GBps"]), reverse=True)[:3]
for row in by_traffic:
    bar = "#" * int(float(row["traffic_GBps"]))
    print(f"{row['workload']:<12} {row['config']:<12} {float(row['traffic_GBps']):6.2f} {bar}")
