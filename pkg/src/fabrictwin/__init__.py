"""Software twin of a composable PCIe-fabric GPU chassis.

Compose virtual systems out of pooled GPUs and NVMe behind a switch
chassis, then predict data-parallel training performance on them with a
calibrated analytical model.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    CompositionError,
    PerfError,
    ServiceError,
    TelemetryError,
    TopologyError,
    TwinError,
)
from .fabric import (
    DEFAULT_LINK_CLASSES,
    Chassis,
    Device,
    Drawer,
    Host,
    LinkClass,
    LinkPath,
    Topology,
    build_reference_topology,
    build_topology,
    path_metrics,
    route,
    to_document,
)
from .composition import (
    Composition,
    DrawerMode,
    NAMED_CONFIGURATIONS,
    apply_named_configuration,
    attach,
    config_to_json,
    detach,
    export_config,
    import_config,
    new_composition,
    set_drawer_mode,
    validate,
)
from .workloads import (
    Dataset,
    Parallelism,
    Precision,
    Strategy,
    WorkloadSpec,
    load_workloads,
    workload_catalog,
)
from .perf import (
    DEFAULT_PERF_CONFIG,
    PerfConfig,
    PerfEstimate,
    StepBreakdown,
    allreduce_time,
    dp_sync_time,
    feasible_batch,
    gradient_bytes,
    relative_change,
    step_time,
    steps_per_epoch,
    storage_effect,
    sweep_rows,
    training_time,
)
from .calibration import (
    CalibrationResult,
    ReferenceAnchor,
    ValidationReport,
    calibrate,
    compute_reference_outputs,
    default_calibrated_workloads,
    load_anchors,
    validate_against_reference,
)
from .telemetry import EventLog, EventRecord, PortCounters, TelemetryStore
