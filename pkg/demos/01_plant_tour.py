"""
A tour of the reference plant
=============================

One 4U switch chassis with two device drawers, a dual-socket host with
eight local V100s, and a pool of eight more GPUs plus an NVMe drive
behind the switch.  This walks the inventory and the link classes that
decide how fast any two endpoints can talk.
"""

from fabrictwin import build_reference_topology, path_metrics, route
from fabrictwin.fabric import port_crossings

topo = build_reference_topology()

# the chassis exposes four host ports; two are cabled, one per drawer
for chassis in topo.chassis:
    print(f"chassis {chassis.id}, ports {', '.join(chassis.host_ports)}")
    for drawer in chassis.drawers:
        slots = [d or "-" for d in drawer.slots]
        print(f"  {drawer.id} via {','.join(drawer.host_ports)}: {slots}")

for host in topo.hosts:
    print(
        f"host {host.id}: {host.cpu_sockets * host.cores_per_socket} cores, "
        f"{host.memory_gib} GiB RAM, local GPUs {sorted(host.local_gpus)}"
    )

# every device pair resolves to a link class: NVLink between local GPUs,
# PCIe gen4 into and through the switch
print()
pairs = [
    ("local-gpu-0", "local-gpu-1"),      # neighbours on the NVLink mesh
    ("local-gpu-0", "falcon-gpu-1-0"),   # host boundary crossed once
    ("falcon-gpu-1-0", "falcon-gpu-1-1"),  # same drawer, switch only
    ("falcon-gpu-1-0", "falcon-gpu-2-0"),  # different drawers
    ("host-1", "nvme-falcon"),           # storage behind the switch
]
for a, b in pairs:
    hop = route(topo, a, b)
    bw, lat = path_metrics(hop)
    crossed = ", ".join(f"{port} {arrow} {drawer}" for port, drawer, arrow in port_crossings(topo, hop)) or "none"
    print(f"{a:>15} -> {b:<15} {hop.class_summary:<6} {bw:6.2f} GB/s {lat:5.2f} us  ports: {crossed}")

# the slowest link on a path is the one the training model will feel;
# cross-drawer rings pay twice the port latency
