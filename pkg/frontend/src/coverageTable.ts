/**
 * Markdown empirical-coverage table: one row per variant grouped by noise
 * family, with nominal-weight and true-weight coverage at both confidence
 * levels side by side.
 */

import { CoverageRow, SchemaError, familyOf, variantOrder } from "./csv.js";

const FAMILY_TITLES: Record<string, string> = {
  gaussian: "Gaussian",
  student_t: "Student-t",
  laplace: "Laplace",
  skew_normal: "Skew-normal",
  biased_gaussian: "Biased Gaussian",
  other: "Other",
};

interface VariantCoverage {
  cov68Wls: number;
  cov68True: number;
  cov95Wls: number;
  cov95True: number;
}

export function renderCoverageTable(rows: CoverageRow[]): string {
  const byVariant = new Map<string, VariantCoverage>();
  for (const id of variantOrder(rows)) {
    byVariant.set(id, { cov68Wls: NaN, cov68True: NaN, cov95Wls: NaN, cov95True: NaN });
  }
  for (const row of rows) {
    const entry = byVariant.get(row.variantId);
    if (entry === undefined) continue;
    if (row.level === 0.68) {
      entry.cov68Wls = row.covWls;
      entry.cov68True = row.covTrue;
    } else if (row.level === 0.95) {
      entry.cov95Wls = row.covWls;
      entry.cov95True = row.covTrue;
    } else {
      throw new SchemaError(`unexpected coverage level ${row.level}`);
    }
  }
  for (const [id, entry] of byVariant) {
    if (Object.values(entry).some((v) => Number.isNaN(v))) {
      throw new SchemaError(`variant ${id} is missing a coverage level`);
    }
  }

  const lines: string[] = [
    "| Family | Variant | 68% (assumed) | 68% (true) | 95% (assumed) | 95% (true) |",
    "| --- | --- | --- | --- | --- | --- |",
  ];
  let lastFamily = "";
  for (const [id, entry] of byVariant) {
    const family = familyOf(id);
    const title = family === lastFamily ? "" : (FAMILY_TITLES[family] ?? family);
    lastFamily = family;
    lines.push(
      `| ${title} | ${id} | ${pct(entry.cov68Wls)} | ${pct(entry.cov68True)} | ` +
        `${pct(entry.cov95Wls)} | ${pct(entry.cov95True)} |`,
    );
  }
  return lines.join("\n") + "\n";
}

function pct(v: number): string {
  return (100 * v).toFixed(1) + "%";
}
