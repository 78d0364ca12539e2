import { ApiError } from "../api.js";
import type { Store } from "../store.js";
import { NAMED_LABELS } from "./whatifPanel.js";

export const DRAWER_MODES = ["STANDARD_1HOST", "STANDARD_2HOST", "ADVANCED"] as const;

/**
 * Admin-only controls: named-configuration apply, drawer-mode switching, and
 * event-log export. The view is only mounted for ADMIN principals; the
 * service enforces the same policy server-side regardless.
 */
export class AdminPanel {
  readonly root: HTMLElement;
  private message = "";
  private eventsText = "";

  constructor(private readonly store: Store) {
    this.root = document.createElement("section");
    this.root.className = "admin-panel";
    this.root.dataset["testid"] = "admin-panel";
    store.subscribe(() => this.render());
    this.render();
  }

  private async run(fn: () => Promise<unknown>): Promise<void> {
    this.message = "";
    try {
      await fn();
    } catch (err) {
      this.message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    const title = document.createElement("h2");
    title.textContent = "administration";
    this.root.appendChild(title);

    const applySel = document.createElement("select");
    applySel.dataset["testid"] = "apply-label";
    for (const label of NAMED_LABELS) {
      const opt = document.createElement("option");
      opt.value = label;
      opt.textContent = label;
      applySel.appendChild(opt);
    }
    const applyBtn = document.createElement("button");
    applyBtn.type = "button";
    applyBtn.dataset["testid"] = "apply-submit";
    applyBtn.textContent = "apply configuration";
    applyBtn.addEventListener("click", () => {
      void this.run(() => this.store.mutate({ action: "apply", label: applySel.value }));
    });

    const drawerSel = document.createElement("select");
    drawerSel.dataset["testid"] = "mode-drawer";
    for (const chassis of this.store.topology?.chassis ?? []) {
      for (const drawer of chassis.drawers) {
        const opt = document.createElement("option");
        opt.value = drawer.id;
        opt.textContent = drawer.id;
        drawerSel.appendChild(opt);
      }
    }
    const modeSel = document.createElement("select");
    modeSel.dataset["testid"] = "mode-value";
    for (const mode of DRAWER_MODES) {
      const opt = document.createElement("option");
      opt.value = mode;
      opt.textContent = mode;
      modeSel.appendChild(opt);
    }
    const modeBtn = document.createElement("button");
    modeBtn.type = "button";
    modeBtn.dataset["testid"] = "mode-submit";
    modeBtn.textContent = "set drawer mode";
    modeBtn.addEventListener("click", () => {
      void this.run(() =>
        this.store.mutate({ action: "mode", drawer: drawerSel.value, mode: modeSel.value }),
      );
    });

    const exportBtn = document.createElement("button");
    exportBtn.type = "button";
    exportBtn.dataset["testid"] = "export-events";
    exportBtn.textContent = "export event log";
    const formatSel = document.createElement("select");
    formatSel.dataset["testid"] = "export-format";
    for (const fmt of ["text", "csv"] as const) {
      const opt = document.createElement("option");
      opt.value = fmt;
      opt.textContent = fmt;
      formatSel.appendChild(opt);
    }
    exportBtn.addEventListener("click", () => {
      void this.run(async () => {
        this.eventsText = await this.store.api.exportEvents(formatSel.value as "text" | "csv");
      });
    });

    this.root.append(applySel, applyBtn, drawerSel, modeSel, modeBtn, formatSel, exportBtn);

    if (this.message) {
      const err = document.createElement("p");
      err.className = "admin-error";
      err.dataset["testid"] = "admin-error";
      err.textContent = this.message;
      this.root.appendChild(err);
    }
    if (this.eventsText) {
      const pre = document.createElement("pre");
      pre.className = "events-dump";
      pre.dataset["testid"] = "events-dump";
      pre.textContent = this.eventsText;
      this.root.appendChild(pre);
    }
  }
}
