"""
Composing virtual systems
=========================

Devices behind the switch belong to nobody until a host claims them.
Drawer modes decide who may claim what: STANDARD_1HOST gives a whole
drawer to one host, STANDARD_2HOST splits it slot-wise between the two
cabled connections, ADVANCED lets up to three hosts share freely.
"""

from fabrictwin import (
    CompositionError,
    DrawerMode,
    NAMED_CONFIGURATIONS,
    apply_named_configuration,
    attach,
    build_reference_topology,
    detach,
    export_config,
    new_composition,
    set_drawer_mode,
    validate,
)

topo = build_reference_topology()

# the benchmark labels from the study are canned compositions
for label, meaning in NAMED_CONFIGURATIONS.items():
    comp = apply_named_configuration(topo, label)
    print(f"{label:<12} rev {comp.revision:>2}  {meaning}")

# manual composition: claim two pooled GPUs and the pooled NVMe
comp = new_composition(topo)
comp = attach(comp, "falcon-gpu-1-0", "host-1", "alice")
comp = attach(comp, "falcon-gpu-1-1", "host-1", "alice")
comp = attach(comp, "nvme-falcon", "host-1", "alice")
print(f"\nmanual composition at revision {comp.revision}:")
for own in comp.ownership.values():
    print(f"  {own.device} -> {own.host} (user {own.user})")

# claiming something twice is refused, the composition stays put
try:
    attach(comp, "falcon-gpu-1-0", "host-1", "bob")
except CompositionError as e:
    print(f"\nsecond claim refused: {e.code}")

# drawer modes are guarded the same way.  STANDARD_2HOST needs two host
# connections and the reference plant cables each drawer to just one.
try:
    set_drawer_mode(comp, "drawer-1", DrawerMode.STANDARD_2HOST)
except CompositionError as e:
    print(f"two-host split refused: {e.code}")

comp = set_drawer_mode(comp, "drawer-1", DrawerMode.STANDARD_1HOST)
print(f"drawer-1 now {comp.mode_of('drawer-1').value}, revision {comp.revision}")

# validate() re-checks a whole composition; the engine never lets an op
# create a violation, so this is interesting mainly for imported docs
print(f"violations: {validate(comp) or 'none'}")

# release a device and show the exportable document
comp = detach(comp, "falcon-gpu-1-1", "alice")
doc = export_config(comp)
print(f"\nexport: modes={doc['modes']}")
print(f"export: {len(doc['ownership'])} ownership rows")
