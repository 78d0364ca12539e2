import { text } from "./format.js";

/**
 * A horizontal bar whose printed value is the verbatim service field.
 *
 * `magnitude` drives only the bar's width (presentation geometry); the
 * visible number is always `text(value)` of the untouched response field.
 */
export function barRow(
  label: string,
  value: unknown,
  unit: string,
  magnitude: number,
  maxMagnitude: number,
  field: string,
): HTMLElement {
  const row = document.createElement("div");
  row.className = "bar-row";

  const name = document.createElement("span");
  name.className = "bar-label";
  name.textContent = label;

  const track = document.createElement("div");
  track.className = "bar-track";
  const bar = document.createElement("div");
  bar.className = "bar-fill";
  const pct = maxMagnitude > 0 ? (Math.max(magnitude, 0) / maxMagnitude) * 100 : 0;
  bar.style.width = `${pct}%`;
  track.appendChild(bar);

  const printed = document.createElement("span");
  printed.className = "bar-value";
  printed.dataset["field"] = field;
  printed.textContent = text(value);

  const unitEl = document.createElement("span");
  unitEl.className = "bar-unit";
  unitEl.textContent = unit;

  row.append(name, track, printed, unitEl);
  return row;
}

/** A labelled verbatim value without a bar. */
export function statRow(label: string, value: unknown, unit: string, field: string): HTMLElement {
  const row = document.createElement("div");
  row.className = "stat-row";

  const name = document.createElement("span");
  name.className = "stat-label";
  name.textContent = label;

  const printed = document.createElement("span");
  printed.className = "stat-value";
  printed.dataset["field"] = field;
  printed.textContent = text(value);

  const unitEl = document.createElement("span");
  unitEl.className = "stat-unit";
  unitEl.textContent = unit;

  row.append(name, printed, unitEl);
  return row;
}
