/**
 * The single place a service response value becomes display text.
 *
 * The UI performs no performance arithmetic: numbers are shown exactly as the
 * JSON parser delivered them (`String` of the field), never rounded, scaled,
 * or re-derived. Missing values render as an em dash.
 */
export function text(value: unknown): string {
  if (value === null || value === undefined) return "—";
  return String(value);
}
