"""Benchmark workload fixtures and training-strategy descriptors.

The five reference workloads ship as data (``data/workloads.json``): three
vision models trained from scratch and two transformer fine-tunes.  Catalog
fields (name, domain, dataset, parameter count, depth) surface through list
endpoints exactly as they appear in the fixture file.  Modeling fields
(bytes per sample, preprocess cost, activation footprint) are calibration
inputs; per-step compute time arrives later via the calibration module and
stays None until then.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, field, replace
from enum import Enum


class Parallelism(str, Enum):
    DP = "DP"  # single-process multi-GPU: master broadcasts and reduces
    DDP = "DDP"  # one process per GPU, ring all-reduce


class Precision(str, Enum):
    FP32 = "FP32"
    FP16_MIXED = "FP16_MIXED"


@dataclass(frozen=True)
class Strategy:
    parallelism: Parallelism = Parallelism.DDP
    precision: Precision = Precision.FP16_MIXED
    sharded: bool = False  # shard optimizer+gradient state across ranks

    def key(self) -> str:
        tag = f"{self.parallelism.value.lower()}+{'fp16' if self.precision is Precision.FP16_MIXED else 'fp32'}"
        return tag + ("+sharded" if self.sharded else "")


@dataclass(frozen=True)
class Dataset:
    name: str
    sample_count: int
    bytes_per_sample: int  # effective bytes read from storage per sample


@dataclass(frozen=True)
class WorkloadSpec:
    key: str
    name: str
    domain: str
    dataset: Dataset
    parameter_count: int
    depth: int
    per_gpu_batch: int
    epochs: int
    sequence_length: int | None = None
    preprocess_us_per_sample: float = 0.0
    activation_bytes_per_sample: float = 0.0
    # per-step compute seconds by Precision value, set by calibration
    compute_step_s: dict = field(default_factory=dict)

    def calibrated(self, precision: Precision) -> bool:
        return precision.value in self.compute_step_s

    def with_compute(self, precision: Precision, seconds: float) -> "WorkloadSpec":
        return replace(
            self, compute_step_s={**self.compute_step_s, precision.value: seconds}
        )


def _load_json(name: str) -> dict:
    ref = importlib.resources.files("fabrictwin").joinpath("data", name)
    return json.loads(ref.read_text())


def load_workloads() -> dict:
    """Uncalibrated workload specs keyed by slug, from the fixture file."""
    raw = _load_json("workloads.json")
    out = {}
    for key, row in raw["workloads"].items():
        ds = row["dataset"]
        out[key] = WorkloadSpec(
            key=key,
            name=row["name"],
            domain=row["domain"],
            dataset=Dataset(ds["name"], ds["sample_count"], ds["bytes_per_sample"]),
            parameter_count=row["parameter_count"],
            depth=row["depth"],
            per_gpu_batch=row["per_gpu_batch"],
            epochs=row["epochs"],
            sequence_length=row.get("sequence_length"),
            preprocess_us_per_sample=row["preprocess_us_per_sample"],
            activation_bytes_per_sample=row["activation_bytes_per_sample"],
        )
    return out


def workload_catalog() -> list:
    """Catalog rows for list endpoints, in fixture order."""
    specs = load_workloads()
    return [
        {
            "key": w.key,
            "name": w.name,
            "domain": w.domain,
            "dataset": w.dataset.name,
            "parameter_count": w.parameter_count,
            "depth": w.depth,
            "per_gpu_batch": w.per_gpu_batch,
            "epochs": w.epochs,
            "sequence_length": w.sequence_length,
        }
        for w in specs.values()
    ]
