"""Physical inventory and connectivity model of the composable chassis.

The modeled plant is a 4U PCIe-switch chassis with two device drawers of
eight slots each and four host uplink ports (H1-H4, 400 Gb/s CDFP), plus the
hosts attached to it.  Hosts carry their own local devices (NVLink-connected
GPUs, a local NVMe) while drawer slots hold pooled devices reachable through
the switch fabric.

Link behavior is data, not code: every path is classified into one of five
measured link classes, and the class table (bandwidth GB/s bidirectional,
latency us) can be overridden from documents.  Default values come from
microbenchmarks of the reference plant:

========  ==========  ================  ============
class     protocol    bandwidth (GB/s)  latency (us)
========  ==========  ================  ============
L-L       NVLINK      72.37             1.85
F-L       PCIE-GEN4   19.64             2.66
F-F       PCIE-GEN4   24.47             2.08
========  ==========  ================  ============

L-L is local GPU to local GPU (the NVLink mesh is flattened to a single
all-pairs class), F-L is a fabric-attached ("falcon") device to a local
device through a host port and root complex, F-F is two falcon devices
behind the same drawer switch.  Storage paths get their own classes since
the GPU table does not cover them.  Routes between falcon devices in
different drawers go through the owning host's root complex and are modeled
as two F-L hops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import TopologyError

SLOTS_PER_DRAWER = 8
DRAWERS_PER_CHASSIS = 2
PORTS_PER_CHASSIS = 4
MAX_HOSTS_PER_DRAWER = 3
PORT_RATE_GBPS = 400  # CDFP uplink line rate, Gb/s


@dataclass(frozen=True)
class LinkClass:
    """One row of the measured link-class table."""

    name: str
    protocol: str  # NVLINK | PCIE-GEN4 | PCIE-GEN3
    bandwidth_gbps: float  # bidirectional, GB/s (decimal)
    latency_us: float

    def __post_init__(self):
        if not (self.bandwidth_gbps > 0 and math.isfinite(self.bandwidth_gbps)):
            raise TopologyError("SCHEMA_ERROR", f"link class {self.name}: bandwidth must be > 0")
        if not (self.latency_us > 0 and math.isfinite(self.latency_us)):
            raise TopologyError("SCHEMA_ERROR", f"link class {self.name}: latency must be > 0")


LOCAL_LOCAL = "L-L"
FALCON_LOCAL = "F-L"
FALCON_FALCON = "F-F"
HOST_NVME_LOCAL = "HOST-NVME-LOCAL"
HOST_NVME_FALCON = "HOST-NVME-FALCON"

DEFAULT_LINK_CLASSES = {
    # Local NVLink fabric is rated 300 GB/s peak; modeled at the measured rate.
    LOCAL_LOCAL: LinkClass(LOCAL_LOCAL, "NVLINK", 72.37, 1.85),
    FALCON_LOCAL: LinkClass(FALCON_LOCAL, "PCIE-GEN4", 19.64, 2.66),
    FALCON_FALCON: LinkClass(FALCON_FALCON, "PCIE-GEN4", 24.47, 2.08),
    HOST_NVME_LOCAL: LinkClass(HOST_NVME_LOCAL, "PCIE-GEN3", 3.0, 1.30),
    HOST_NVME_FALCON: LinkClass(HOST_NVME_FALCON, "PCIE-GEN4", 3.0, 3.96),
}


@dataclass(frozen=True)
class Device:
    """A pooled or host-resident device.

    kind GPU: model, memory_gib, hbm; kind NVME: capacity_tb; kind NIC:
    rate_gbps.  Unused attributes stay at their zero defaults.
    """

    id: str
    kind: str  # GPU | NVME | NIC
    model: str = ""
    memory_gib: float = 0.0
    hbm: bool = False
    capacity_tb: float = 0.0
    rate_gbps: float = 0.0

    def __post_init__(self):
        if self.kind not in ("GPU", "NVME", "NIC"):
            raise TopologyError("SCHEMA_ERROR", f"device {self.id}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Drawer:
    id: str
    slots: tuple  # SLOTS_PER_DRAWER entries, device id or None
    host_ports: tuple  # chassis port ids attached to this drawer, in connection order


@dataclass(frozen=True)
class Chassis:
    id: str
    drawers: tuple
    host_ports: tuple  # PORTS_PER_CHASSIS port ids
    port_rate_gbps: float = PORT_RATE_GBPS


@dataclass(frozen=True)
class Host:
    id: str
    cpu_sockets: int
    cores_per_socket: int
    memory_gib: float
    local_gpus: tuple  # device ids
    local_nvme: str | None  # device id
    adapters: tuple  # chassis port ids this host is cabled to


@dataclass(frozen=True)
class Hop:
    """One logical link of a path: endpoint to endpoint with a class.

    ``via`` lists the infrastructure nodes traversed (switch/port/host root
    complex) in order, for oracle checks and for port-crossing accounting.
    """

    a: str
    b: str
    link: LinkClass
    via: tuple = ()


@dataclass(frozen=True)
class LinkPath:
    hops: tuple
    class_summary: str


@dataclass(frozen=True, eq=True)
class Topology:
    hosts: tuple
    chassis: tuple
    devices: tuple
    link_classes: dict = field(default_factory=lambda: dict(DEFAULT_LINK_CLASSES))

    # derived lookup tables, rebuilt on construction
    _dev: dict = field(init=False, compare=False, repr=False, default=None)
    _host: dict = field(init=False, compare=False, repr=False, default=None)
    _drawer: dict = field(init=False, compare=False, repr=False, default=None)
    _drawer_of: dict = field(init=False, compare=False, repr=False, default=None)
    _local_host_of: dict = field(init=False, compare=False, repr=False, default=None)
    _host_of_port: dict = field(init=False, compare=False, repr=False, default=None)
    _slot_of: dict = field(init=False, compare=False, repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_dev", {d.id: d for d in self.devices})
        object.__setattr__(self, "_host", {h.id: h for h in self.hosts})
        drawer, drawer_of, slot_of = {}, {}, {}
        for ch in self.chassis:
            for dr in ch.drawers:
                drawer[dr.id] = dr
                for idx, dev_id in enumerate(dr.slots):
                    if dev_id is not None:
                        drawer_of[dev_id] = dr.id
                        slot_of[dev_id] = idx
        local_host_of = {}
        host_of_port = {}
        for h in self.hosts:
            for g in h.local_gpus:
                local_host_of[g] = h.id
            if h.local_nvme:
                local_host_of[h.local_nvme] = h.id
            for p in h.adapters:
                host_of_port[p] = h.id
        object.__setattr__(self, "_drawer", drawer)
        object.__setattr__(self, "_drawer_of", drawer_of)
        object.__setattr__(self, "_local_host_of", local_host_of)
        object.__setattr__(self, "_host_of_port", host_of_port)
        object.__setattr__(self, "_slot_of", slot_of)

    # -- lookups ---------------------------------------------------------

    def device(self, device_id: str) -> Device:
        try:
            return self._dev[device_id]
        except KeyError:
            raise TopologyError("UNKNOWN_DEVICE", f"no device {device_id!r}") from None

    def host(self, host_id: str) -> Host:
        try:
            return self._host[host_id]
        except KeyError:
            raise TopologyError("DANGLING_REFERENCE", f"no host {host_id!r}") from None

    def drawer(self, drawer_id: str) -> Drawer:
        try:
            return self._drawer[drawer_id]
        except KeyError:
            raise TopologyError("DANGLING_REFERENCE", f"no drawer {drawer_id!r}") from None

    def drawers(self):
        return [dr for ch in self.chassis for dr in ch.drawers]

    def drawer_of(self, device_id: str) -> str | None:
        return self._drawer_of.get(device_id)

    def slot_of(self, device_id: str) -> int | None:
        return self._slot_of.get(device_id)

    def local_host_of(self, device_id: str) -> str | None:
        return self._local_host_of.get(device_id)

    def host_of_port(self, port_id: str) -> str | None:
        return self._host_of_port.get(port_id)

    def falcon_devices(self, kind: str | None = None):
        out = [self._dev[d] for d in self._drawer_of]
        if kind:
            out = [d for d in out if d.kind == kind]
        return sorted(out, key=lambda d: d.id)

    def link(self, name: str) -> LinkClass:
        return self.link_classes[name]

    def bridge_port(self, host_id: str, drawer_id: str) -> str | None:
        """First chassis port cabling this host to this drawer, if any."""
        host = self.host(host_id)
        for p in self.drawer(drawer_id).host_ports:
            if p in host.adapters:
                return p
        return None


# -- construction --------------------------------------------------------


def build_reference_topology(link_classes: dict | None = None) -> Topology:
    """The experimental plant: one dual-socket host with eight local V100s
    and a local 4 TB NVMe, attached to both drawers of one chassis; four
    pooled V100s per drawer and a pooled 4 TB NVMe in drawer 2 (16 GPUs in
    total across host and fabric)."""
    v100 = dict(kind="GPU", model="Tesla V100 SXM2", memory_gib=16.0, hbm=True)
    devices = [Device(id=f"local-gpu-{i}", **v100) for i in range(8)]
    devices += [Device(id=f"falcon-gpu-1-{i}", **v100) for i in range(4)]
    devices += [Device(id=f"falcon-gpu-2-{i}", **v100) for i in range(4)]
    devices.append(Device(id="nvme-local", kind="NVME", model="4TB NVMe", capacity_tb=4.0))
    devices.append(Device(id="nvme-falcon", kind="NVME", model="4TB NVMe", capacity_tb=4.0))

    drawer1 = Drawer(
        id="drawer-1",
        slots=tuple([f"falcon-gpu-1-{i}" for i in range(4)] + [None] * 4),
        host_ports=("H1",),
    )
    drawer2 = Drawer(
        id="drawer-2",
        slots=tuple([f"falcon-gpu-2-{i}" for i in range(4)] + ["nvme-falcon"] + [None] * 3),
        host_ports=("H2",),
    )
    chassis = Chassis(
        id="falcon-1",
        drawers=(drawer1, drawer2),
        host_ports=("H1", "H2", "H3", "H4"),
    )
    host = Host(
        id="host-1",
        cpu_sockets=2,
        cores_per_socket=20,
        memory_gib=756.0,
        local_gpus=tuple(f"local-gpu-{i}" for i in range(8)),
        local_nvme="nvme-local",
        adapters=("H1", "H2"),
    )
    return Topology(
        hosts=(host,),
        chassis=(chassis,),
        devices=tuple(devices),
        link_classes=dict(link_classes or DEFAULT_LINK_CLASSES),
    )


def _require(cond: bool, code: str, msg: str):
    if not cond:
        raise TopologyError(code, msg)


def build_topology(document: dict) -> Topology:
    """Validate a topology document and construct the model.

    Raises DUPLICATE_ID for reused ids, CAPACITY_EXCEEDED for over-filled
    drawers or over-attached drawers, DANGLING_REFERENCE for references to
    missing devices/ports, SCHEMA_ERROR for malformed documents.
    """
    if not isinstance(document, dict) or document.get("schema") != 1:
        raise TopologyError("SCHEMA_ERROR", "topology document must carry schema: 1")

    try:
        raw_devices = document["devices"]
        raw_hosts = document["hosts"]
        raw_chassis = document["chassis"]
    except KeyError as e:
        raise TopologyError("SCHEMA_ERROR", f"topology document missing {e.args[0]!r}") from None

    link_classes = {}
    for name, row in document.get("link_classes", {}).items():
        link_classes[name] = LinkClass(
            name=name,
            protocol=row["protocol"],
            bandwidth_gbps=row["bandwidth_gbps"],
            latency_us=row["latency_us"],
        )
    for name, lc in DEFAULT_LINK_CLASSES.items():
        link_classes.setdefault(name, lc)

    devices = []
    seen = set()
    for dev_id, row in raw_devices.items():
        _require(dev_id not in seen, "DUPLICATE_ID", f"device {dev_id} defined twice")
        seen.add(dev_id)
        devices.append(
            Device(
                id=dev_id,
                kind=row.get("kind", ""),
                model=row.get("model", ""),
                memory_gib=row.get("memory_gib", 0.0),
                hbm=row.get("hbm", False),
                capacity_tb=row.get("capacity_tb", 0.0),
                rate_gbps=row.get("rate_gbps", 0.0),
            )
        )
    dev_ids = {d.id for d in devices}

    placed = set()

    def place(dev_id, where):
        _require(dev_id in dev_ids, "DANGLING_REFERENCE", f"{where} references unknown device {dev_id}")
        _require(dev_id not in placed, "DUPLICATE_ID", f"device {dev_id} placed more than once")
        placed.add(dev_id)

    all_ids = set(seen)
    chassis_list = []
    port_to_drawer_count = {}
    for ch in raw_chassis:
        ch_id = ch["id"]
        _require(ch_id not in all_ids, "DUPLICATE_ID", f"id {ch_id} reused")
        all_ids.add(ch_id)
        ports = tuple(ch.get("host_ports", ()))
        _require(
            len(ports) == PORTS_PER_CHASSIS and len(set(ports)) == PORTS_PER_CHASSIS,
            "SCHEMA_ERROR",
            f"chassis {ch_id} must list {PORTS_PER_CHASSIS} distinct host ports",
        )
        for p in ports:
            _require(p not in all_ids, "DUPLICATE_ID", f"id {p} reused")
            all_ids.add(p)
        drawers = []
        raw_drawers = ch.get("drawers", [])
        _require(
            len(raw_drawers) == DRAWERS_PER_CHASSIS,
            "SCHEMA_ERROR",
            f"chassis {ch_id} must have exactly {DRAWERS_PER_CHASSIS} drawers",
        )
        for dr in raw_drawers:
            dr_id = dr["id"]
            _require(dr_id not in all_ids, "DUPLICATE_ID", f"id {dr_id} reused")
            all_ids.add(dr_id)
            slots = list(dr.get("slots", []))
            _require(
                len([s for s in slots if s is not None]) <= SLOTS_PER_DRAWER,
                "CAPACITY_EXCEEDED",
                f"drawer {dr_id} holds more than {SLOTS_PER_DRAWER} devices",
            )
            _require(
                len(slots) <= SLOTS_PER_DRAWER,
                "CAPACITY_EXCEEDED",
                f"drawer {dr_id} lists more than {SLOTS_PER_DRAWER} slots",
            )
            slots = slots + [None] * (SLOTS_PER_DRAWER - len(slots))
            for s in slots:
                if s is not None:
                    place(s, f"drawer {dr_id}")
            attached = tuple(dr.get("host_ports", ()))
            _require(
                len(attached) <= MAX_HOSTS_PER_DRAWER,
                "CAPACITY_EXCEEDED",
                f"drawer {dr_id} attached to more than {MAX_HOSTS_PER_DRAWER} host ports",
            )
            for p in attached:
                _require(p in ports, "DANGLING_REFERENCE", f"drawer {dr_id} references unknown port {p}")
                port_to_drawer_count[p] = port_to_drawer_count.get(p, 0) + 1
                _require(port_to_drawer_count[p] == 1, "DUPLICATE_ID", f"port {p} attached to two drawers")
            drawers.append(Drawer(id=dr_id, slots=tuple(slots), host_ports=attached))
        chassis_list.append(
            Chassis(
                id=ch_id,
                drawers=tuple(drawers),
                host_ports=ports,
                port_rate_gbps=ch.get("port_rate_gbps", PORT_RATE_GBPS),
            )
        )

    all_ports = {p for ch in chassis_list for p in ch.host_ports}
    hosts = []
    claimed_ports = set()
    for hr in raw_hosts:
        h_id = hr["id"]
        _require(h_id not in all_ids, "DUPLICATE_ID", f"id {h_id} reused")
        all_ids.add(h_id)
        for g in hr.get("local_gpus", []):
            place(g, f"host {h_id}")
        nvme = hr.get("local_nvme")
        if nvme:
            place(nvme, f"host {h_id}")
        adapters = tuple(hr.get("adapters", ()))
        for p in adapters:
            _require(p in all_ports, "DANGLING_REFERENCE", f"host {h_id} references unknown port {p}")
            _require(p not in claimed_ports, "DUPLICATE_ID", f"port {p} cabled to two hosts")
            claimed_ports.add(p)
        hosts.append(
            Host(
                id=h_id,
                cpu_sockets=hr.get("cpu_sockets", 1),
                cores_per_socket=hr.get("cores_per_socket", 1),
                memory_gib=hr.get("memory_gib", 0.0),
                local_gpus=tuple(hr.get("local_gpus", ())),
                local_nvme=nvme,
                adapters=adapters,
            )
        )

    unplaced = dev_ids - placed
    _require(not unplaced, "DANGLING_REFERENCE", f"devices not placed anywhere: {sorted(unplaced)}")

    return Topology(
        hosts=tuple(hosts),
        chassis=tuple(chassis_list),
        devices=tuple(devices),
        link_classes=link_classes,
    )


def to_document(topology: Topology) -> dict:
    """Inverse of build_topology; stable ordering for byte-stable dumps."""
    return {
        "schema": 1,
        "devices": {
            d.id: {
                "kind": d.kind,
                "model": d.model,
                "memory_gib": d.memory_gib,
                "hbm": d.hbm,
                "capacity_tb": d.capacity_tb,
                "rate_gbps": d.rate_gbps,
            }
            for d in sorted(topology.devices, key=lambda d: d.id)
        },
        "hosts": [
            {
                "id": h.id,
                "cpu_sockets": h.cpu_sockets,
                "cores_per_socket": h.cores_per_socket,
                "memory_gib": h.memory_gib,
                "local_gpus": list(h.local_gpus),
                "local_nvme": h.local_nvme,
                "adapters": list(h.adapters),
            }
            for h in topology.hosts
        ],
        "chassis": [
            {
                "id": ch.id,
                "port_rate_gbps": ch.port_rate_gbps,
                "host_ports": list(ch.host_ports),
                "drawers": [
                    {"id": dr.id, "slots": list(dr.slots), "host_ports": list(dr.host_ports)}
                    for dr in ch.drawers
                ],
            }
            for ch in topology.chassis
        ],
        "link_classes": {
            name: {
                "protocol": lc.protocol,
                "bandwidth_gbps": lc.bandwidth_gbps,
                "latency_us": lc.latency_us,
            }
            for name, lc in sorted(topology.link_classes.items())
        },
    }


# -- routing -------------------------------------------------------------


def _locate(topology: Topology, endpoint: str):
    if endpoint in topology._host:
        return ("host", endpoint, None)
    dev = topology.device(endpoint)  # raises UNKNOWN_DEVICE
    drawer = topology.drawer_of(endpoint)
    if drawer is not None:
        return ("falcon", topology._drawer[drawer].id, dev)
    host = topology.local_host_of(endpoint)
    if host is None:
        raise TopologyError("NO_PATH", f"device {endpoint} is not placed on any host")
    if dev.kind == "NVME":
        return ("local_nvme", host, dev)
    return ("local_dev", host, dev)


def _owning_host(topology: Topology, drawer_id: str) -> list:
    """Hosts cabled to this drawer, in the drawer's connection order."""
    out = []
    for p in topology.drawer(drawer_id).host_ports:
        h = topology.host_of_port(p)
        if h is not None:
            out.append((h, p))
    return out


def _falcon_host_hop(topology: Topology, dev: Device, drawer_id: str, host_id: str, toward_host: bool) -> Hop:
    port = topology.bridge_port(host_id, drawer_id)
    if port is None:
        raise TopologyError("NO_PATH", f"host {host_id} is not cabled to {drawer_id}")
    cls = HOST_NVME_FALCON if dev.kind == "NVME" else FALCON_LOCAL
    link = topology.link(cls)
    if toward_host:
        return Hop(dev.id, host_id, link, via=(f"switch:{drawer_id}", f"port:{port}"))
    return Hop(host_id, dev.id, link, via=(f"port:{port}", f"switch:{drawer_id}"))


def route(topology: Topology, a: str, b: str) -> LinkPath:
    """Minimal-hop logical path between two endpoints (device or host ids).

    Hop classes follow the measured-link semantics: a falcon-to-local pair is
    a single F-L hop even though it traverses switch, port and root complex,
    because that is the unit the class table measures.  Cross-drawer falcon
    pairs bridge through a host that is cabled to both drawers (two F-L
    hops).  Raises NO_PATH when no modeled path exists.
    """
    if a == b:
        raise TopologyError("NO_PATH", f"route endpoints must differ ({a})")
    ka, la, da = _locate(topology, a)
    kb, lb, db = _locate(topology, b)
    hops = None

    if ka == "host" and kb == "host":
        raise TopologyError("NO_PATH", "no host-to-host fabric is modeled")

    # normalize: handle (X, host) by computing (host, X) and reversing
    if kb == "host":
        rev = route(topology, b, a)
        hops = tuple(Hop(h.b, h.a, h.link, tuple(reversed(h.via))) for h in reversed(rev.hops))
        return LinkPath(hops=hops, class_summary=rev.class_summary)

    if ka == "host":
        host = topology.host(a)
        if kb == "local_dev":
            if lb != a:
                raise TopologyError("NO_PATH", f"{b} is local to {lb}, not {a}")
            hops = (Hop(a, b, topology.link(LOCAL_LOCAL), via=("rc:" + a,)),)
        elif kb == "local_nvme":
            if lb != a:
                raise TopologyError("NO_PATH", f"{b} is local to {lb}, not {a}")
            hops = (Hop(a, b, topology.link(HOST_NVME_LOCAL), via=("rc:" + a,)),)
        else:  # falcon
            hops = (_falcon_host_hop(topology, db, lb, a, toward_host=False),)
        return _finish(hops)

    if ka in ("local_dev", "local_nvme") and kb in ("local_dev", "local_nvme"):
        if la != lb:
            raise TopologyError("NO_PATH", f"{a} and {b} live on different hosts")
        if ka == "local_dev" and kb == "local_dev":
            hops = (Hop(a, b, topology.link(LOCAL_LOCAL), via=()),)
        else:
            # through the host root complex: device-side class per endpoint
            first = topology.link(LOCAL_LOCAL if ka == "local_dev" else HOST_NVME_LOCAL)
            second = topology.link(LOCAL_LOCAL if kb == "local_dev" else HOST_NVME_LOCAL)
            hops = (Hop(a, la, first, via=("rc:" + la,)), Hop(lb, b, second, via=("rc:" + lb,)))
        return _finish(hops)

    if ka == "falcon" and kb == "falcon":
        if la == lb:
            hops = (Hop(a, b, topology.link(FALCON_FALCON), via=(f"switch:{la}",)),)
            return _finish(hops)
        # different drawers: bridge through a host cabled to both
        for h, _ in _owning_host(topology, la):
            if topology.bridge_port(h, lb) is not None:
                hops = (
                    _falcon_host_hop(topology, da, la, h, toward_host=True),
                    _falcon_host_hop(topology, db, lb, h, toward_host=False),
                )
                return _finish(hops)
        raise TopologyError("NO_PATH", f"no host bridges {la} and {lb}")

    # mixed falcon / local-device pair
    if ka == "falcon":
        falcon_kind, falcon_loc, falcon_dev = ka, la, da
        other_kind, other_host, other = kb, lb, b
        forward = True
    else:
        falcon_kind, falcon_loc, falcon_dev = kb, lb, db
        other_kind, other_host, other = ka, la, a
        forward = False
    if topology.bridge_port(other_host, falcon_loc) is None:
        raise TopologyError("NO_PATH", f"host {other_host} is not cabled to {falcon_loc}")
    if other_kind == "local_dev":
        # single measured hop: falcon device to local device through port + RC
        port = topology.bridge_port(other_host, falcon_loc)
        via = (f"switch:{falcon_loc}", f"port:{port}", f"rc:{other_host}")
        hop = Hop(falcon_dev.id, other, topology.link(FALCON_LOCAL), via=via)
        hops = (hop,)
    else:  # local NVMe: bridge at the host
        hops = (
            _falcon_host_hop(topology, falcon_dev, falcon_loc, other_host, toward_host=True),
            Hop(other_host, other, topology.link(HOST_NVME_LOCAL), via=("rc:" + other_host,)),
        )
    if not forward:
        hops = tuple(Hop(h.b, h.a, h.link, tuple(reversed(h.via))) for h in reversed(hops))
    return _finish(hops)


def _finish(hops: tuple) -> LinkPath:
    bottleneck = min(hops, key=lambda h: h.link.bandwidth_gbps)
    return LinkPath(hops=hops, class_summary=bottleneck.link.name)


def path_metrics(path: LinkPath) -> tuple:
    """(bandwidth GB/s, latency us): min bandwidth over hops, summed latency."""
    bw = min(h.link.bandwidth_gbps for h in path.hops)
    lat = sum(h.link.latency_us for h in path.hops)
    return (bw, lat)


def port_crossings(topology: Topology, path: LinkPath):
    """Host-port traversals along a path.

    Returns a list of (port_id, drawer_id, direction) where direction is
    "out" when bytes leave the drawer through the port and "in" when they
    enter it, in traversal order.  Each entry is one unit of ingress+egress
    accounting at the chassis uplinks.
    """
    out = []
    port_of_drawer = {}
    for ch in topology.chassis:
        for dr in ch.drawers:
            for p in dr.host_ports:
                port_of_drawer[p] = dr.id
    for hop in path.hops:
        nodes = list(hop.via)
        for i, node in enumerate(nodes):
            if not node.startswith("port:"):
                continue
            port = node.split(":", 1)[1]
            drawer = port_of_drawer.get(port)
            before = nodes[i - 1] if i > 0 else None
            direction = "out" if (before or "").startswith("switch:") else "in"
            out.append((port, drawer, direction))
    return out


def with_link_classes(topology: Topology, overrides: dict) -> Topology:
    """New topology with some link-class rows replaced.

    Partial rows are merged onto the existing class, so an override may
    adjust just the bandwidth or just the latency.
    """
    merged = dict(topology.link_classes)
    for name, row in overrides.items():
        if isinstance(row, LinkClass):
            merged[name] = row
            continue
        base = merged.get(name)
        if base is None and not ("bandwidth_gbps" in row and "latency_us" in row):
            raise TopologyError(
                "SCHEMA_ERROR", f"new link class {name!r} needs bandwidth_gbps and latency_us"
            )
        merged[name] = LinkClass(
            name=name,
            protocol=row.get("protocol", base.protocol if base else "PCIE-GEN4"),
            bandwidth_gbps=row.get("bandwidth_gbps", base.bandwidth_gbps if base else 0.0),
            latency_us=row.get("latency_us", base.latency_us if base else 0.0),
        )
    return replace(topology, link_classes=merged)
