import { ApiError } from "../api.js";
import type { Store } from "../store.js";
import type { DeviceDoc, OwnershipRow } from "../types.js";

type ViewMode = "topology" | "list";

function deviceSummary(dev: DeviceDoc | undefined): string {
  if (!dev) return "unknown device";
  if (dev.kind === "GPU") return `GPU ${dev.model} ${dev.memory_gib} GiB`;
  if (dev.kind === "NVME") return `NVMe ${dev.capacity_tb} TB`;
  return `NIC ${dev.rate_gbps} Gb/s`;
}

/**
 * Live plant + composition view with a list/topology toggle.
 *
 * Everything shown comes from the last polled /v1/topology and
 * /v1/composition responses; attach/detach submit mutations and wait for the
 * next poll to confirm (the stale flag bridges the gap).
 */
export class TopologyView {
  readonly root: HTMLElement;
  private mode: ViewMode = "topology";
  private controlError = "";

  constructor(private readonly store: Store) {
    this.root = document.createElement("section");
    this.root.className = "topology-view";
    store.subscribe(() => this.render());
    this.render();
  }

  setMode(mode: ViewMode): void {
    this.mode = mode;
    this.render();
  }

  private ownershipIndex(): Map<string, OwnershipRow> {
    const rows = this.store.composition?.document.ownership ?? [];
    return new Map(rows.map((row) => [row.device, row]));
  }

  private async submit(action: Parameters<Store["mutate"]>[0]): Promise<void> {
    this.controlError = "";
    try {
      await this.store.mutate(action);
    } catch (err) {
      this.controlError = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
    this.render();
  }

  render(): void {
    const { topology, composition, connection } = this.store;
    this.root.replaceChildren();

    const status = document.createElement("div");
    status.className = "status-bar";
    if (connection === "lost") {
      const banner = document.createElement("div");
      banner.className = "banner banner-lost";
      banner.dataset["testid"] = "connection-lost";
      banner.textContent = "connection lost — retrying";
      status.appendChild(banner);
    }
    const rev = document.createElement("span");
    rev.className = "revision";
    rev.dataset["testid"] = "revision";
    rev.textContent = `revision ${composition?.revision ?? "?"}`;
    status.appendChild(rev);
    if (this.store.stale) {
      const stale = document.createElement("span");
      stale.className = "stale";
      stale.dataset["testid"] = "stale-revision";
      stale.textContent = `awaiting revision ${this.store.pendingRevision}`;
      status.appendChild(stale);
    }
    this.root.appendChild(status);

    const toggle = document.createElement("div");
    toggle.className = "view-toggle";
    for (const mode of ["topology", "list"] as ViewMode[]) {
      const btn = document.createElement("button");
      btn.textContent = `${mode} view`;
      btn.dataset["testid"] = `view-${mode}`;
      if (mode === this.mode) btn.classList.add("active");
      btn.addEventListener("click", () => this.setMode(mode));
      toggle.appendChild(btn);
    }
    this.root.appendChild(toggle);

    if (!topology || !composition) {
      const empty = document.createElement("p");
      empty.textContent = "waiting for the service…";
      this.root.appendChild(empty);
      return;
    }

    if (composition.violations.length > 0) {
      const box = document.createElement("ul");
      box.className = "violations";
      box.dataset["testid"] = "violations";
      for (const v of composition.violations) {
        const li = document.createElement("li");
        li.textContent = `${v.drawer} ${v.rule}: ${v.detail}`;
        box.appendChild(li);
      }
      this.root.appendChild(box);
    }

    this.root.appendChild(this.mode === "topology" ? this.renderTopology() : this.renderList());
    this.root.appendChild(this.renderControls());
  }

  private tile(deviceId: string, owned: OwnershipRow | undefined): HTMLElement {
    const dev = this.store.topology?.devices[deviceId];
    const tile = document.createElement("div");
    tile.className = "device-tile";
    tile.dataset["device"] = deviceId;
    const name = document.createElement("strong");
    name.textContent = deviceId;
    const detail = document.createElement("small");
    detail.textContent = deviceSummary(dev);
    tile.append(name, detail);
    const badge = document.createElement("span");
    badge.className = "owner-badge";
    if (owned) {
      tile.dataset["ownerHost"] = owned.host;
      badge.textContent = `→ ${owned.host} (${owned.user})`;
    } else {
      badge.textContent = "pooled";
    }
    tile.appendChild(badge);
    return tile;
  }

  private renderTopology(): HTMLElement {
    const topo = this.store.topology!;
    const owners = this.ownershipIndex();
    const wrap = document.createElement("div");
    wrap.className = "plant";

    const hosts = document.createElement("div");
    hosts.className = "hosts";
    for (const host of topo.hosts) {
      const card = document.createElement("article");
      card.className = "host-card";
      card.dataset["host"] = host.id;
      const title = document.createElement("h3");
      title.textContent = host.id;
      const meta = document.createElement("p");
      meta.textContent =
        `${host.cpu_sockets * host.cores_per_socket} cores, ${host.memory_gib} GiB, ` +
        `adapters ${host.adapters.join(", ") || "none"}`;
      card.append(title, meta);

      const localList = document.createElement("div");
      localList.className = "local-devices";
      const localIds = [...host.local_gpus, ...(host.local_nvme ? [host.local_nvme] : [])];
      for (const id of localIds) localList.appendChild(this.tile(id, owners.get(id)));
      card.appendChild(localList);

      const attached = document.createElement("div");
      attached.className = "attached-devices";
      attached.dataset["testid"] = `attached-${host.id}`;
      const label = document.createElement("h4");
      const pooledOwned = [...owners.values()].filter(
        (row) => row.host === host.id && !localIds.includes(row.device),
      );
      label.textContent = `attached pooled devices (${pooledOwned.length})`;
      attached.appendChild(label);
      for (const row of pooledOwned) attached.appendChild(this.tile(row.device, row));
      card.appendChild(attached);
      hosts.appendChild(card);
    }
    wrap.appendChild(hosts);

    const chassisWrap = document.createElement("div");
    chassisWrap.className = "chassis";
    for (const chassis of topo.chassis) {
      const card = document.createElement("article");
      card.className = "chassis-card";
      const title = document.createElement("h3");
      title.textContent = `${chassis.id} — ports ${chassis.host_ports.join(", ")}`;
      card.appendChild(title);
      for (const drawer of chassis.drawers) {
        const dEl = document.createElement("div");
        dEl.className = "drawer";
        dEl.dataset["drawer"] = drawer.id;
        const head = document.createElement("h4");
        const mode = this.store.composition?.document.modes[drawer.id] ?? "?";
        head.textContent = `${drawer.id} [${mode}] via ${drawer.host_ports.join(", ") || "unconnected"}`;
        dEl.appendChild(head);
        const slots = document.createElement("div");
        slots.className = "slots";
        drawer.slots.forEach((deviceId, i) => {
          const slot = document.createElement("div");
          slot.className = "slot";
          slot.dataset["slot"] = `${drawer.id}/${i}`;
          if (deviceId) slot.appendChild(this.tile(deviceId, owners.get(deviceId)));
          else slot.textContent = "empty";
          slots.appendChild(slot);
        });
        dEl.appendChild(slots);
        card.appendChild(dEl);
      }
      chassisWrap.appendChild(card);
    }
    wrap.appendChild(chassisWrap);
    return wrap;
  }

  private renderList(): HTMLElement {
    const topo = this.store.topology!;
    const owners = this.ownershipIndex();
    const table = document.createElement("table");
    table.className = "device-list";
    table.dataset["testid"] = "device-list";
    const head = document.createElement("tr");
    for (const col of ["device", "kind", "location", "owner host", "owner user"]) {
      const th = document.createElement("th");
      th.textContent = col;
      head.appendChild(th);
    }
    table.appendChild(head);

    const location = new Map<string, string>();
    for (const host of topo.hosts) {
      for (const id of host.local_gpus) location.set(id, `${host.id} (local)`);
      if (host.local_nvme) location.set(host.local_nvme, `${host.id} (local)`);
    }
    for (const chassis of topo.chassis) {
      for (const drawer of chassis.drawers) {
        drawer.slots.forEach((id, i) => {
          if (id) location.set(id, `${chassis.id}/${drawer.id}/slot ${i}`);
        });
      }
    }

    for (const id of Object.keys(topo.devices).sort()) {
      const row = document.createElement("tr");
      row.dataset["device"] = id;
      const owned = owners.get(id);
      const cells = [
        id,
        topo.devices[id]?.kind ?? "?",
        location.get(id) ?? "?",
        owned?.host ?? "—",
        owned?.user ?? "—",
      ];
      for (const value of cells) {
        const td = document.createElement("td");
        td.textContent = value;
        row.appendChild(td);
      }
      table.appendChild(row);
    }
    return table;
  }

  private renderControls(): HTMLElement {
    const topo = this.store.topology!;
    const owners = this.ownershipIndex();
    const box = document.createElement("form");
    box.className = "compose-controls";
    box.addEventListener("submit", (e) => e.preventDefault());

    const pooled = document.createElement("select");
    pooled.dataset["testid"] = "attach-device";
    for (const chassis of topo.chassis) {
      for (const drawer of chassis.drawers) {
        for (const id of drawer.slots) {
          if (id && !owners.has(id)) {
            const opt = document.createElement("option");
            opt.value = id;
            opt.textContent = id;
            pooled.appendChild(opt);
          }
        }
      }
    }
    const hostSel = document.createElement("select");
    hostSel.dataset["testid"] = "attach-host";
    for (const host of topo.hosts) {
      const opt = document.createElement("option");
      opt.value = host.id;
      opt.textContent = host.id;
      hostSel.appendChild(opt);
    }
    const attachBtn = document.createElement("button");
    attachBtn.type = "button";
    attachBtn.dataset["testid"] = "attach-submit";
    attachBtn.textContent = "attach";
    attachBtn.addEventListener("click", () => {
      if (pooled.value && hostSel.value) {
        void this.submit({ action: "attach", device: pooled.value, host: hostSel.value });
      }
    });

    const ownedSel = document.createElement("select");
    ownedSel.dataset["testid"] = "detach-device";
    for (const row of owners.values()) {
      const opt = document.createElement("option");
      opt.value = row.device;
      opt.textContent = `${row.device} (${row.host})`;
      ownedSel.appendChild(opt);
    }
    const detachBtn = document.createElement("button");
    detachBtn.type = "button";
    detachBtn.dataset["testid"] = "detach-submit";
    detachBtn.textContent = "detach";
    detachBtn.addEventListener("click", () => {
      if (ownedSel.value) void this.submit({ action: "detach", device: ownedSel.value });
    });

    box.append(pooled, hostSel, attachBtn, ownedSel, detachBtn);
    if (this.controlError) {
      const err = document.createElement("p");
      err.className = "control-error";
      err.dataset["testid"] = "control-error";
      err.textContent = this.controlError;
      box.appendChild(err);
    }
    return box;
  }
}
