/**
 * Client-side mirror of the server's record validation, over the same
 * CSV cell encodings the API accepts (empty string = missing, Y/N/NA
 * tri-states, YYYY-MM-DD/YYYY-MM-DD date ranges). The server remains
 * authoritative; this exists so the form can flag problems before
 * submitting and render 422 violations on the same rules.
 */

import type { FeatureSpec, Violation } from "./types.js";

const DATE_RE = /^\d{4}-\d{2}-\d{2}$/;

function isValidDate(text: string): boolean {
  if (!DATE_RE.test(text)) return false;
  const time = Date.parse(`${text}T00:00:00Z`);
  if (Number.isNaN(time)) return false;
  // reject normalized overflow like 2023-02-31
  return new Date(time).toISOString().slice(0, 10) === text;
}

export function validateCell(spec: FeatureSpec, cell: string): Violation | null {
  if (cell === "") return null; // missing is legal for every kind
  switch (spec.kind) {
    case "text":
      return null;
    case "boolean":
      if (!["Y", "N", "NA"].includes(cell)) {
        return { key: spec.key, rule: "bad_value", message: "expected Y, N or NA" };
      }
      return null;
    case "integer": {
      if (!/^-?\d+$/.test(cell)) {
        return { key: spec.key, rule: "bad_value", message: "expected an integer" };
      }
      const value = Number(cell);
      if (spec.allowed_integers && !spec.allowed_integers.includes(value)) {
        return {
          key: spec.key,
          rule: "integer_not_allowed",
          message: `must be one of ${spec.allowed_integers.join(", ")}`,
        };
      }
      return null;
    }
    case "categorical":
      if (spec.categories && !spec.categories.includes(cell)) {
        return { key: spec.key, rule: "category_not_allowed", message: "not an allowed category" };
      }
      return null;
    case "date_range": {
      const parts = cell.split("/");
      const [start, end] = parts;
      if (parts.length !== 2 || start === undefined || end === undefined || !isValidDate(start) || !isValidDate(end)) {
        return {
          key: spec.key,
          rule: "bad_value",
          message: "expected YYYY-MM-DD/YYYY-MM-DD",
        };
      }
      if (start > end) {
        return { key: spec.key, rule: "bad_value", message: "range start is after its end" };
      }
      return null;
    }
  }
}

export function validateValues(
  schema: FeatureSpec[],
  values: Record<string, string>,
): Violation[] {
  const known = new Map(schema.map((spec) => [spec.key, spec]));
  const violations: Violation[] = [];
  for (const [key, cell] of Object.entries(values)) {
    const spec = known.get(key);
    if (!spec) {
      violations.push({ key, rule: "unknown_feature", message: "not in the schema" });
      continue;
    }
    const violation = validateCell(spec, cell);
    if (violation) violations.push(violation);
  }
  return violations;
}

/** Group violations by field for inline display; "" collects record-level ones. */
export function violationsByField(violations: Violation[]): Record<string, string[]> {
  const grouped: Record<string, string[]> = {};
  for (const violation of violations) {
    const key = violation.key || "";
    (grouped[key] ??= []).push(violation.message);
  }
  return grouped;
}
