"""Composition engine: who owns which pooled device, under which drawer mode.

Drawer modes mirror the chassis firmware:

* STANDARD_1HOST - one host connection serves the whole drawer; at most one
  distinct owner host across the drawer's devices.
* STANDARD_2HOST - two host connections with fixed slot halves: connection 0
  owns slots 0-3, connection 1 owns slots 4-7.  The two connections may
  belong to the same host.
* ADVANCED - up to three hosts share the drawer with an arbitrary partition
  of devices (dynamic provisioning).

Ownership is exclusive per device.  Host-resident devices (a host's own
GPUs/NVMe) can appear in the ownership map too - that is how a composition
expresses which local devices a training job actually uses - and they are
exempt from drawer-mode rules since they live outside the fabric.

All mutating operations are functional: they return a new Composition and
never modify their input, so a failed call leaves state untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import CompositionError
from .fabric import Topology

CONFIG_SCHEMA = 1


class DrawerMode(str, Enum):
    STANDARD_1HOST = "STANDARD_1HOST"
    STANDARD_2HOST = "STANDARD_2HOST"
    ADVANCED = "ADVANCED"


@dataclass(frozen=True)
class Ownership:
    device: str
    host: str
    user: str


@dataclass(frozen=True)
class Violation:
    drawer: str | None
    rule: str
    detail: str


@dataclass(frozen=True)
class Composition:
    topology: Topology
    modes: dict  # drawer id -> DrawerMode
    ownership: dict  # device id -> Ownership
    revision: int = 0
    link_overrides: dict = field(default_factory=dict)

    def owner_of(self, device_id: str) -> Ownership | None:
        return self.ownership.get(device_id)

    def owned_by(self, host_id: str):
        return sorted(o.device for o in self.ownership.values() if o.host == host_id)

    def drawer_owners(self, drawer_id: str):
        """Distinct owner hosts among this drawer's devices."""
        out = set()
        for dev_id, own in self.ownership.items():
            if self.topology.drawer_of(dev_id) == drawer_id:
                out.add(own.host)
        return out

    def mode_of(self, drawer_id: str) -> DrawerMode:
        return self.modes.get(drawer_id, DrawerMode.ADVANCED)


def new_composition(topology: Topology) -> Composition:
    """Empty composition: every drawer in ADVANCED mode, nothing owned."""
    modes = {dr.id: DrawerMode.ADVANCED for dr in topology.drawers()}
    return Composition(topology=topology, modes=modes, ownership={})


# -- mode rules ----------------------------------------------------------


def _half_connection(topology: Topology, drawer_id: str, slot: int) -> str | None:
    """Host on the connection serving this slot under STANDARD_2HOST."""
    ports = topology.drawer(drawer_id).host_ports
    idx = 0 if slot < 4 else 1
    if idx >= len(ports):
        return None
    return topology.host_of_port(ports[idx])


def _check_attach_mode(comp: Composition, drawer_id: str, device_id: str, host_id: str):
    mode = comp.mode_of(drawer_id)
    owners = comp.drawer_owners(drawer_id)
    if mode is DrawerMode.STANDARD_1HOST:
        if owners - {host_id}:
            raise CompositionError(
                "HOST_LIMIT",
                f"{drawer_id} is in STANDARD_1HOST and already serves {sorted(owners)}",
            )
    elif mode is DrawerMode.STANDARD_2HOST:
        slot = comp.topology.slot_of(device_id)
        expected = _half_connection(comp.topology, drawer_id, slot)
        if expected != host_id:
            raise CompositionError(
                "MODE_CAPACITY",
                f"slot {slot} of {drawer_id} belongs to connection host {expected!r} "
                f"under STANDARD_2HOST, not {host_id}",
            )
    else:  # ADVANCED
        if host_id not in owners and len(owners) >= 3:
            raise CompositionError(
                "HOST_LIMIT",
                f"{drawer_id} already serves 3 hosts under ADVANCED",
            )


def set_drawer_mode(comp: Composition, drawer_id: str, mode: DrawerMode) -> Composition:
    """Switch a drawer's mode.

    Allowed when the drawer has no ownership entries or when existing
    ownership already satisfies the new mode; MODE_CONFLICT otherwise.
    STANDARD_2HOST additionally requires two host connections on the drawer.
    """
    mode = DrawerMode(mode)
    drawer = comp.topology.drawer(drawer_id)  # raises DANGLING_REFERENCE
    connections = [comp.topology.host_of_port(p) for p in drawer.host_ports]
    connections = [c for c in connections if c is not None]
    if mode is DrawerMode.STANDARD_2HOST and len(connections) < 2:
        raise CompositionError(
            "MODE_CONFLICT", f"{drawer_id} needs two host connections for STANDARD_2HOST"
        )
    if mode is DrawerMode.STANDARD_1HOST and len(connections) < 1:
        raise CompositionError(
            "MODE_CONFLICT", f"{drawer_id} has no host connection for STANDARD_1HOST"
        )
    candidate = replace(
        comp,
        modes={**comp.modes, drawer_id: mode},
        ownership=dict(comp.ownership),
        revision=comp.revision + 1,
    )
    bad = [v for v in validate(candidate) if v.drawer == drawer_id]
    if bad:
        raise CompositionError(
            "MODE_CONFLICT",
            f"existing ownership violates {mode.value} on {drawer_id}: {bad[0].detail}",
        )
    return candidate


def attach(comp: Composition, device_id: str, host_id: str, acting_user: str) -> Composition:
    """Give ``host_id`` exclusive ownership of a pooled or local device."""
    topo = comp.topology
    topo.host(host_id)  # raises DANGLING_REFERENCE
    device = topo.device(device_id)  # raises UNKNOWN_DEVICE
    current = comp.owner_of(device_id)
    if current is not None:
        raise CompositionError(
            "ALREADY_OWNED", f"{device_id} is owned by {current.host} (user {current.user})"
        )
    drawer_id = topo.drawer_of(device_id)
    if drawer_id is None:
        # host-resident device: only its own host may use it
        if topo.local_host_of(device_id) != host_id:
            raise CompositionError(
                "NOT_CONNECTED", f"{device_id} is local to {topo.local_host_of(device_id)}"
            )
    else:
        if topo.bridge_port(host_id, drawer_id) is None:
            raise CompositionError(
                "NOT_CONNECTED", f"host {host_id} has no connection to {drawer_id}"
            )
        _check_attach_mode(comp, drawer_id, device_id, host_id)
    ownership = dict(comp.ownership)
    ownership[device_id] = Ownership(device=device_id, host=host_id, user=acting_user)
    return replace(comp, ownership=ownership, revision=comp.revision + 1)


def detach(comp: Composition, device_id: str, acting_user: str, *, admin: bool = False) -> Composition:
    """Return a device to the pool.  Only the owning user or an admin may."""
    comp.topology.device(device_id)
    current = comp.owner_of(device_id)
    if current is None:
        raise CompositionError("NOT_OWNED", f"{device_id} is not attached to any host")
    if not admin and current.user != acting_user:
        raise CompositionError(
            "FORBIDDEN", f"{device_id} is held by user {current.user}, not {acting_user}"
        )
    ownership = dict(comp.ownership)
    del ownership[device_id]
    return replace(comp, ownership=ownership, revision=comp.revision + 1)


def validate(comp: Composition):
    """Every mode/ownership violation in the composition, empty when sound."""
    topo = comp.topology
    out = []
    for dev_id, own in sorted(comp.ownership.items()):
        if dev_id not in topo._dev:
            out.append(Violation(None, "UNKNOWN_DEVICE", f"ownership references {dev_id}"))
            continue
        drawer_id = topo.drawer_of(dev_id)
        if drawer_id is None:
            if topo.local_host_of(dev_id) != own.host:
                out.append(
                    Violation(None, "NOT_CONNECTED", f"{dev_id} is not local to {own.host}")
                )
            continue
        if topo.bridge_port(own.host, drawer_id) is None:
            out.append(
                Violation(drawer_id, "NOT_CONNECTED", f"{own.host} not cabled to {drawer_id}")
            )
    for dr in topo.drawers():
        mode = comp.mode_of(dr.id)
        owners = comp.drawer_owners(dr.id)
        connections = [h for h in (topo.host_of_port(p) for p in dr.host_ports) if h is not None]
        if mode is DrawerMode.STANDARD_2HOST and len(connections) < 2:
            out.append(
                Violation(
                    dr.id,
                    "MODE_CONFLICT",
                    f"{dr.id} needs two host connections for STANDARD_2HOST",
                )
            )
        elif mode is DrawerMode.STANDARD_1HOST and not connections:
            out.append(
                Violation(
                    dr.id, "MODE_CONFLICT", f"{dr.id} has no host connection for STANDARD_1HOST"
                )
            )
        if mode is DrawerMode.STANDARD_1HOST and len(owners) > 1:
            out.append(
                Violation(
                    dr.id,
                    "HOST_LIMIT",
                    f"STANDARD_1HOST drawer owned by {len(owners)} hosts: {sorted(owners)}",
                )
            )
        elif mode is DrawerMode.STANDARD_2HOST:
            for dev_id, own in sorted(comp.ownership.items()):
                if topo.drawer_of(dev_id) != dr.id:
                    continue
                slot = topo.slot_of(dev_id)
                expected = _half_connection(topo, dr.id, slot)
                if expected != own.host:
                    out.append(
                        Violation(
                            dr.id,
                            "MODE_CAPACITY",
                            f"slot {slot} must belong to connection host {expected!r}, "
                            f"owned by {own.host}",
                        )
                    )
        elif mode is DrawerMode.ADVANCED and len(owners) > 3:
            out.append(
                Violation(dr.id, "HOST_LIMIT", f"ADVANCED drawer owned by {len(owners)} hosts")
            )
    return out


# -- named configurations ------------------------------------------------

NAMED_CONFIGURATIONS = {
    "localGPUs": "8 local GPUs and local storage",
    "hybridGPUs": "4 local GPUs, 4 falcon GPUs, and local storage",
    "falconGPUs": "8 falcon GPUs",
    "localNVMe": "8 local GPUs and local NVMe",
    "falconNVMe": "8 local GPUs and falcon NVMe",
}


def _pick(items, n, code, what):
    if len(items) < n:
        raise CompositionError(code, f"need {n} {what}, found {len(items)}")
    return items[:n]


def apply_named_configuration(
    topology: Topology, label: str, host_id: str | None = None, acting_user: str = "operator"
) -> Composition:
    """Build the composition a benchmark label denotes, from an empty state.

    Raises UNKNOWN_LABEL for labels outside the table and
    INSUFFICIENT_RESOURCES when the topology cannot satisfy one (not enough
    local/falcon GPUs, or no pooled NVMe where one is called for).
    """
    if label not in NAMED_CONFIGURATIONS:
        raise CompositionError("UNKNOWN_LABEL", f"no named configuration {label!r}")
    if host_id is None:
        if not topology.hosts:
            raise CompositionError("INSUFFICIENT_RESOURCES", "topology has no hosts")
        host_id = topology.hosts[0].id
    host = topology.host(host_id)

    local_gpus = sorted(host.local_gpus)
    falcon_gpus = [
        d.id
        for d in topology.falcon_devices("GPU")
        if topology.bridge_port(host_id, topology.drawer_of(d.id)) is not None
    ]
    falcon_nvmes = [
        d.id
        for d in topology.falcon_devices("NVME")
        if topology.bridge_port(host_id, topology.drawer_of(d.id)) is not None
    ]

    want = []
    if label == "localGPUs":
        want = _pick(local_gpus, 8, "INSUFFICIENT_RESOURCES", "local GPUs")
    elif label == "hybridGPUs":
        want = _pick(local_gpus, 4, "INSUFFICIENT_RESOURCES", "local GPUs")
        want += _pick(falcon_gpus, 4, "INSUFFICIENT_RESOURCES", "falcon GPUs")
    elif label == "falconGPUs":
        want = _pick(falcon_gpus, 8, "INSUFFICIENT_RESOURCES", "falcon GPUs")
    elif label == "localNVMe":
        want = _pick(local_gpus, 8, "INSUFFICIENT_RESOURCES", "local GPUs")
        if not host.local_nvme:
            raise CompositionError("INSUFFICIENT_RESOURCES", f"{host_id} has no local NVMe")
        want += [host.local_nvme]
    elif label == "falconNVMe":
        want = _pick(local_gpus, 8, "INSUFFICIENT_RESOURCES", "local GPUs")
        want += _pick(falcon_nvmes, 1, "INSUFFICIENT_RESOURCES", "falcon NVMe")

    comp = new_composition(topology)
    for dev in want:
        comp = attach(comp, dev, host_id, acting_user)
    return comp


# -- configuration documents ---------------------------------------------


def export_config(comp: Composition) -> dict:
    """Composition as a schema-tagged document with stable ordering."""
    doc = {
        "schema": CONFIG_SCHEMA,
        "modes": {dr: comp.mode_of(dr).value for dr in sorted(comp.modes)},
        "ownership": [
            {"device": o.device, "host": o.host, "user": o.user}
            for o in sorted(comp.ownership.values(), key=lambda o: o.device)
        ],
    }
    if comp.link_overrides:
        doc["link_overrides"] = {
            name: dict(row) for name, row in sorted(comp.link_overrides.items())
        }
    return doc


def config_to_json(doc: dict) -> str:
    """Byte-stable serialization: same composition, same bytes."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def import_config(topology: Topology, doc: dict) -> Composition:
    """Parse a configuration document onto a topology.

    Mode rules are not enforced at import time - run validate() on the
    result - but schema shape and device existence are.  The imported
    composition starts at revision 0.
    """
    if not isinstance(doc, dict) or doc.get("schema") != CONFIG_SCHEMA:
        raise CompositionError("SCHEMA_ERROR", f"config document must carry schema: {CONFIG_SCHEMA}")
    modes = {dr.id: DrawerMode.ADVANCED for dr in topology.drawers()}
    for drawer_id, mode in (doc.get("modes") or {}).items():
        if drawer_id not in modes:
            raise CompositionError("SCHEMA_ERROR", f"unknown drawer {drawer_id!r} in modes")
        try:
            modes[drawer_id] = DrawerMode(mode)
        except ValueError:
            raise CompositionError("SCHEMA_ERROR", f"unknown drawer mode {mode!r}") from None
    ownership = {}
    entries = doc.get("ownership")
    if not isinstance(entries, list):
        raise CompositionError("SCHEMA_ERROR", "config document needs an ownership list")
    for row in entries:
        try:
            dev, host, user = row["device"], row["host"], row["user"]
        except (TypeError, KeyError):
            raise CompositionError(
                "SCHEMA_ERROR", f"ownership rows need device/host/user: {row!r}"
            ) from None
        if dev not in topology._dev:
            raise CompositionError("UNKNOWN_DEVICE", f"ownership references {dev!r}")
        if dev in ownership:
            raise CompositionError("SCHEMA_ERROR", f"device {dev} listed twice")
        topology.host(host)
        ownership[dev] = Ownership(device=dev, host=host, user=user)
    link_overrides = dict(doc.get("link_overrides") or {})
    return Composition(
        topology=topology,
        modes=modes,
        ownership=ownership,
        revision=0,
        link_overrides=link_overrides,
    )
