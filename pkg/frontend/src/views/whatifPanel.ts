import { ApiError } from "../api.js";
import { barRow, statRow } from "../chart.js";
import { text } from "../format.js";
import type { Store } from "../store.js";
import type { SimulateResponse } from "../types.js";

export const NAMED_LABELS = [
  "localGPUs",
  "hybridGPUs",
  "falconGPUs",
  "localNVMe",
  "falconNVMe",
] as const;

/**
 * What-if simulation panel.
 *
 * Submits /v1/simulate and charts the step breakdown, the PCIe traffic rate,
 * and the percent change against the localGPUs reference — all taken verbatim
 * from service response fields. The panel itself computes nothing; bar widths
 * are scaled for display but every printed number is the raw field text.
 */
export class WhatIfPanel {
  readonly root: HTMLElement;
  private result: SimulateResponse | null = null;
  private error = "";

  constructor(private readonly store: Store) {
    this.root = document.createElement("section");
    this.root.className = "whatif-panel";
    store.subscribe(() => this.renderForm());
    this.render();
  }

  private select(testid: string, options: readonly string[], labels?: string[]): HTMLSelectElement {
    const sel = document.createElement("select");
    sel.dataset["testid"] = testid;
    options.forEach((value, i) => {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = labels?.[i] ?? value;
      sel.appendChild(opt);
    });
    return sel;
  }

  render(): void {
    this.root.replaceChildren();
    const title = document.createElement("h2");
    title.textContent = "what-if simulation";
    this.root.appendChild(title);
    this.root.appendChild(document.createElement("div")).className = "whatif-form-slot";
    this.root.appendChild(document.createElement("div")).className = "whatif-result-slot";
    this.renderForm();
    this.renderResult();
  }

  private renderForm(): void {
    const slot = this.root.querySelector(".whatif-form-slot");
    if (!slot) return;
    slot.replaceChildren();

    const form = document.createElement("form");
    form.addEventListener("submit", (e) => e.preventDefault());

    const workloadSel = this.select(
      "whatif-workload",
      this.store.workloads.map((w) => w.key),
      this.store.workloads.map((w) => w.name),
    );
    const labelSel = this.select("whatif-label", ["current", ...NAMED_LABELS]);
    const parSel = this.select("whatif-parallelism", ["DDP", "DP"]);
    const precSel = this.select("whatif-precision", ["FP16_MIXED", "FP32"]);
    const sharded = document.createElement("input");
    sharded.type = "checkbox";
    sharded.dataset["testid"] = "whatif-sharded";

    const run = document.createElement("button");
    run.type = "button";
    run.dataset["testid"] = "whatif-run";
    run.textContent = "simulate";
    run.addEventListener("click", () => {
      void this.submit(
        workloadSel.value,
        labelSel.value,
        parSel.value,
        precSel.value,
        sharded.checked,
      );
    });

    form.append(workloadSel, labelSel, parSel, precSel, sharded, run);
    if (this.error) {
      const err = document.createElement("p");
      err.className = "form-error";
      err.dataset["testid"] = "whatif-error";
      err.textContent = this.error;
      form.appendChild(err);
    }
    slot.appendChild(form);
  }

  async submit(
    workload: string,
    label: string,
    parallelism: string,
    precision: string,
    sharded: boolean,
  ): Promise<void> {
    this.error = "";
    try {
      const body = {
        workload,
        strategy: { parallelism, precision, sharded },
        record_steps: 0,
        ...(label === "current" ? {} : { label }),
      };
      this.result = await this.store.api.simulate(body);
    } catch (err) {
      this.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.result = null;
    }
    this.renderForm();
    this.renderResult();
  }

  private renderResult(): void {
    const slot = this.root.querySelector(".whatif-result-slot");
    if (!slot) return;
    slot.replaceChildren();
    const res = this.result;
    if (!res) return;

    const box = document.createElement("div");
    box.className = "whatif-result";
    box.dataset["testid"] = "whatif-result";

    const head = document.createElement("h3");
    head.textContent = `${res.workload} on ${res.label ?? "current composition"}`;
    box.appendChild(head);

    const strat = document.createElement("p");
    strat.className = "strategy-line";
    strat.textContent =
      `${text(res.strategy.parallelism)} / ${text(res.strategy.precision)}` +
      `${res.strategy.sharded ? " / sharded" : ""} on ${text(res.n_gpus)} GPUs`;
    box.appendChild(strat);

    const breakdown = document.createElement("div");
    breakdown.className = "breakdown-chart";
    breakdown.dataset["testid"] = "breakdown-chart";
    const phases: [string, number, string][] = [
      ["load", res.step.load_s, "step.load_s"],
      ["compute", res.step.compute_s, "step.compute_s"],
      ["communication", res.step.comm_s, "step.comm_s"],
    ];
    const maxPhase = Math.max(...phases.map(([, v]) => v));
    for (const [label, value, field] of phases) {
      breakdown.appendChild(barRow(label, value, "s", value, maxPhase, field));
    }
    breakdown.appendChild(statRow("step total", res.step.total_s, "s", "step.total_s"));
    box.appendChild(breakdown);

    const totals = document.createElement("div");
    totals.className = "totals";
    totals.appendChild(statRow("steps per epoch", res.steps_per_epoch, "", "steps_per_epoch"));
    totals.appendChild(statRow("epoch", res.epoch_s, "s", "epoch_s"));
    totals.appendChild(statRow("end to end", res.total_s, "s", "total_s"));
    totals.appendChild(statRow("GPU utilization", res.gpu_util, "", "gpu_util"));
    box.appendChild(totals);

    const traffic = document.createElement("div");
    traffic.className = "traffic-chart";
    traffic.dataset["testid"] = "traffic-chart";
    traffic.appendChild(
      barRow(
        "PCIe traffic",
        res.pcie_traffic_gbps,
        "GB/s",
        res.pcie_traffic_gbps,
        Math.max(res.pcie_traffic_gbps, 1),
        "pcie_traffic_gbps",
      ),
    );
    box.appendChild(traffic);

    const vs = document.createElement("div");
    vs.className = "vs-local";
    vs.dataset["testid"] = "vs-local";
    vs.appendChild(
      statRow(
        `change vs ${res.vs_local?.label ?? "localGPUs"}`,
        res.vs_local ? res.vs_local.total_pct : null,
        "%",
        "vs_local.total_pct",
      ),
    );
    box.appendChild(vs);

    slot.appendChild(box);
  }
}
