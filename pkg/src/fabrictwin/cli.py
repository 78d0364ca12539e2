"""Command-line interface for the composable-infrastructure twin.

State is document-centric: ``compose`` subcommands read and write a
composition document (JSON) on disk, so a shell session works like an
operator console without a daemon.  Exit codes: 0 success, 1 usage error,
2 domain failure (invalid composition, infeasible model input, bind
failure), 3 anchor validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .calibration import (
    calibration_results,
    default_calibrated_workloads,
    load_anchors,
    validate_against_reference,
)
from .composition import (
    NAMED_CONFIGURATIONS,
    DrawerMode,
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
from .errors import TwinError
from .fabric import build_reference_topology, build_topology, to_document
from .perf import SWEEP_COLUMNS, estimate_as_dict, sweep_rows, training_time
from .workloads import Parallelism, Precision, Strategy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_ANCHORS = 3


def _load_topology(args):
    if getattr(args, "topology", None):
        with open(args.topology) as f:
            return build_topology(json.load(f))
    return build_reference_topology()


def _load_composition(topology, args):
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as f:
                return import_config(topology, json.load(f))
        except FileNotFoundError:
            return new_composition(topology)
    return new_composition(topology)


def _save_composition(comp, args, out=sys.stdout):
    doc = config_to_json(export_config(comp))
    path = getattr(args, "config", None)
    if path:
        with open(path, "w") as f:
            f.write(doc)
    else:
        out.write(doc)


_PARALLELISM_FLAGS = {"ddp": Parallelism.DDP, "dp": Parallelism.DP}
_PRECISION_FLAGS = {"fp16": Precision.FP16_MIXED, "fp32": Precision.FP32}


def _strategy(args) -> Strategy:
    return Strategy(
        parallelism=_PARALLELISM_FLAGS[args.strategy],
        precision=_PRECISION_FLAGS[args.precision],
        sharded=bool(getattr(args, "sharded", False)),
    )


def _add_strategy_args(p):
    p.add_argument("--strategy", choices=sorted(_PARALLELISM_FLAGS), default="ddp")
    p.add_argument("--precision", choices=sorted(_PRECISION_FLAGS), default="fp16")
    p.add_argument("--sharded", action="store_true", help="shard optimizer state across ranks")


# -- subcommand bodies ---------------------------------------------------


def cmd_topology_build(args, out):
    topo = _load_topology(args)
    doc = json.dumps(to_document(topo), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(doc)
    else:
        out.write(doc)
    return EXIT_OK


def cmd_topology_show(args, out):
    topo = _load_topology(args)
    for chassis in topo.chassis:
        out.write(f"chassis {chassis.id}: ports {', '.join(chassis.host_ports)}\n")
        for drawer in chassis.drawers:
            cabled = ", ".join(drawer.host_ports) or "none"
            out.write(f"  {drawer.id} (ports {cabled}):\n")
            for slot, dev_id in enumerate(drawer.slots):
                what = f"{topo.device(dev_id).kind} {dev_id}" if dev_id else "empty"
                out.write(f"    slot {slot}: {what}\n")
    for host in topo.hosts:
        out.write(
            f"host {host.id}: {host.cpu_sockets}x{host.cores_per_socket} cores, "
            f"{host.memory_gib} GiB, {len(host.local_gpus)} local GPUs, "
            f"adapters {', '.join(host.adapters)}\n"
        )
    out.write("link classes:\n")
    for name in sorted(topo.link_classes):
        lc = topo.link_classes[name]
        out.write(f"  {name}: {lc.bandwidth_gbps} GB/s, {lc.latency_us} us ({lc.protocol})\n")
    return EXIT_OK


def cmd_compose_apply(args, out):
    topo = _load_topology(args)
    comp = apply_named_configuration(topo, args.label, args.host, args.user)
    _save_composition(comp, args, out)
    return EXIT_OK


def cmd_compose_attach(args, out):
    topo = _load_topology(args)
    comp = _load_composition(topo, args)
    comp = attach(comp, args.device, args.host, args.user)
    _save_composition(comp, args, out)
    return EXIT_OK


def cmd_compose_detach(args, out):
    topo = _load_topology(args)
    comp = _load_composition(topo, args)
    comp = detach(comp, args.device, args.user, admin=args.admin)
    _save_composition(comp, args, out)
    return EXIT_OK


def cmd_compose_mode(args, out):
    topo = _load_topology(args)
    comp = _load_composition(topo, args)
    comp = set_drawer_mode(comp, args.drawer, DrawerMode(args.mode))
    _save_composition(comp, args, out)
    return EXIT_OK


def cmd_compose_validate(args, out):
    topo = _load_topology(args)
    comp = _load_composition(topo, args)
    violations = validate(comp)
    for v in violations:
        out.write(f"{v.drawer}: {v.rule}: {v.detail}\n")
    if violations:
        out.write(f"{len(violations)} violation(s)\n")
        return EXIT_DOMAIN
    out.write("ok\n")
    return EXIT_OK


def cmd_compose_export(args, out):
    topo = _load_topology(args)
    comp = _load_composition(topo, args)
    out.write(config_to_json(export_config(comp)))
    return EXIT_OK


def cmd_compose_import(args, out):
    topo = _load_topology(args)
    with open(args.source) as f:
        comp = import_config(topo, json.load(f))
    _save_composition(comp, args, out)
    violations = validate(comp)
    for v in violations:
        out.write(f"warning {v.drawer}: {v.rule}: {v.detail}\n")
    return EXIT_OK


def cmd_simulate(args, out):
    topo = _load_topology(args)
    # baselines were measured on the reference plant; the topology argument
    # only changes what gets composed and routed
    workloads = default_calibrated_workloads()
    if args.workload not in workloads:
        raise TwinError("UNKNOWN_DEVICE", f"no workload {args.workload!r}; "
                        f"choose from {', '.join(sorted(workloads))}")
    if args.label:
        comp = apply_named_configuration(topo, args.label)
    else:
        comp = _load_composition(topo, args)
    est = training_time(workloads[args.workload], comp, _strategy(args), label=args.label)
    if args.json:
        out.write(json.dumps(estimate_as_dict(est), indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    s = est.step
    out.write(f"workload           {est.workload}\n")
    out.write(f"configuration      {est.label or 'from document'}\n")
    out.write(f"strategy           {est.strategy.key()}\n")
    out.write(f"gpus               {est.n_gpus}\n")
    out.write(f"step load          {s.load_s * 1e3:.3f} ms\n")
    out.write(f"step compute       {s.compute_s * 1e3:.3f} ms\n")
    out.write(f"step comm          {s.comm_s * 1e3:.3f} ms\n")
    out.write(f"step total         {s.total_s * 1e3:.3f} ms\n")
    out.write(f"steps per epoch    {est.steps_per_epoch}\n")
    out.write(f"epoch              {est.epoch_s:.2f} s\n")
    out.write(f"training total     {est.total_s / 3600:.3f} h ({est.total_s:.1f} s)\n")
    out.write(f"fabric traffic     {est.pcie_traffic_gbps:.3f} GB/s\n")
    out.write(f"gpu utilization    {est.gpu_util * 100:.1f} %\n")
    return EXIT_OK


def cmd_sweep(args, out):
    topo = _load_topology(args)
    workloads = default_calibrated_workloads()
    if args.workloads and args.workloads != "all":
        wanted = args.workloads.split(",")
        for key in wanted:
            if key not in workloads:
                raise TwinError("UNKNOWN_DEVICE", f"no workload {key!r}")
        workloads = {key: workloads[key] for key in wanted}
    labels = args.configs.split(",") if args.configs else list(NAMED_CONFIGURATIONS)
    for label in labels:
        if label not in NAMED_CONFIGURATIONS:
            raise TwinError("UNKNOWN_LABEL", f"no configuration label {label!r}")

    rows = sweep_rows(
        workloads, labels, lambda label: apply_named_configuration(topo, label), _strategy(args)
    )

    def write_rows(fh):
        w = csv.DictWriter(fh, fieldnames=list(SWEEP_COLUMNS), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    if args.out:
        with open(args.out, "w", newline="") as f:
            write_rows(f)
    else:
        write_rows(out)
    return EXIT_OK


def cmd_calibrate(args, out):
    topo = _load_topology(args)
    results = calibration_results(topo)
    if args.json:
        payload = {
            key: {
                "compute_step_s": r.compute_step_s,
                "activation_bytes_per_sample": r.activation_bytes_per_sample,
            }
            for key, r in results.items()
        }
        out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    out.write(f"{'workload':<14} {'fp16 compute':>14} {'fp32 compute':>14} {'act/sample':>12}\n")
    for key in sorted(results):
        r = results[key]
        fp16 = r.compute_step_s.get(Precision.FP16_MIXED.value)
        fp32 = r.compute_step_s.get(Precision.FP32.value)
        out.write(
            f"{key:<14} {fp16 * 1e3:>11.3f} ms {fp32 * 1e3:>11.3f} ms "
            f"{r.activation_bytes_per_sample / 1e6:>9.1f} MB\n"
        )
    return EXIT_OK


def cmd_validate_anchors(args, out):
    anchors = load_anchors(args.anchors) if args.anchors else None
    report = validate_against_reference(anchors)
    text = report.to_csv() if args.csv else report.to_text() + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        out.write(text)
    return EXIT_OK if report.passed else EXIT_ANCHORS


def cmd_serve(args, out):
    from .service import ServiceConfig, serve

    if args.config_file:
        config = ServiceConfig.from_file(args.config_file)
    else:
        config = ServiceConfig().with_env_overrides()
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if args.state:
        config.state_path = args.state
    if args.static:
        config.static_dir = args.static
    out.write(f"listening on {config.host}:{config.port}\n")
    serve(config)
    return EXIT_OK


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fabrictwin",
        description="software twin of a composed PCIe-fabric training plant",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    topo = sub.add_parser("topology", help="inspect or emit the plant topology")
    topo_sub = topo.add_subparsers(dest="subcommand", required=True)
    p = topo_sub.add_parser("build", help="emit the reference topology document")
    p.add_argument("--topology", help="alternative topology document to normalize")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_topology_build)
    p = topo_sub.add_parser("show", help="human-readable topology summary")
    p.add_argument("--topology")
    p.set_defaults(func=cmd_topology_show)

    comp = sub.add_parser("compose", help="build and edit composition documents")
    comp_sub = comp.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--topology")
        p.add_argument("--config", help="composition document to read and write")

    p = comp_sub.add_parser("apply", help="apply a named configuration")
    common(p)
    p.add_argument("--label", required=True, choices=sorted(NAMED_CONFIGURATIONS))
    p.add_argument("--host", help="composing host (defaults to the only host)")
    p.add_argument("--user", default="operator")
    p.set_defaults(func=cmd_compose_apply)

    p = comp_sub.add_parser("attach", help="attach a device to a host")
    common(p)
    p.add_argument("device")
    p.add_argument("host")
    p.add_argument("--user", default="operator")
    p.set_defaults(func=cmd_compose_attach)

    p = comp_sub.add_parser("detach", help="release a device")
    common(p)
    p.add_argument("device")
    p.add_argument("--user", default="operator")
    p.add_argument("--admin", action="store_true", help="override ownership checks")
    p.set_defaults(func=cmd_compose_detach)

    p = comp_sub.add_parser("mode", help="set a drawer's allocation mode")
    common(p)
    p.add_argument("drawer")
    p.add_argument("mode", choices=[m.value for m in DrawerMode])
    p.set_defaults(func=cmd_compose_mode)

    p = comp_sub.add_parser("validate", help="check a document against drawer rules")
    common(p)
    p.set_defaults(func=cmd_compose_validate)

    p = comp_sub.add_parser("export", help="print the canonical document")
    common(p)
    p.set_defaults(func=cmd_compose_export)

    p = comp_sub.add_parser("import", help="normalize an external document")
    common(p)
    p.add_argument("source", help="document to import")
    p.set_defaults(func=cmd_compose_import)

    p = sub.add_parser("simulate", help="estimate training time on a composition")
    p.add_argument("--topology")
    p.add_argument("--config", help="composition document (default: current directory state)")
    p.add_argument("--label", help="use a named configuration instead of a document")
    p.add_argument("--workload", required=True)
    _add_strategy_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="estimate workloads x configurations as CSV")
    p.add_argument("--topology")
    p.add_argument("--workloads", default="all", help="'all' or comma-separated workload keys")
    p.add_argument("--configs", help="comma-separated configuration labels (default: all)")
    _add_strategy_args(p)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="recover compute times from shipped baselines")
    p.add_argument("--topology")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate-anchors", help="replay reference measurements")
    p.add_argument("--anchors", help="anchor file (default: shipped anchors)")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate_anchors)

    p = sub.add_parser("serve", help="run the HTTP control service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--state", help="state directory for persistence")
    p.add_argument("--config-file", help="service configuration JSON")
    p.add_argument("--static", help="directory with a built web UI")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; keep 2 for domain failures instead
        return EXIT_USAGE if e.code == 2 else (e.code or EXIT_OK)
    try:
        return args.func(args, out)
    except TwinError as e:
        err.write(f"error: {e.message}\n")
        return EXIT_DOMAIN
    except FileNotFoundError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE
    except (json.JSONDecodeError, ValueError) as e:
        err.write(f"error: invalid input: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
