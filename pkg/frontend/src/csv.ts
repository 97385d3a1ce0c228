/**
 * Parsing of the versioned crbsense CSV outputs.
 *
 * Every file starts with `# crbsense csv-schema <name> <version>` followed
 * by a column-header line; anything that does not match the expected schema
 * is refused rather than guessed at.
 */

export class SchemaError extends Error {}

export const SUPPORTED_VERSION = "v1";

export interface CrbRow {
  variantId: string;
  scenarioId: number;
  lambda: number;
  busId: number;
  stateKind: "theta" | "vmag";
  assumedVar: number;
  trueVar: number;
  rho: number;
}

export interface CoverageRow {
  variantId: string;
  level: number;
  covWls: number;
  covTrue: number;
  nScenarios: number;
}

export interface RmseRow {
  variantId: string;
  scenarioId: number;
  lambda: number;
  rmseVmag: number;
}

const EXPECTED_COLUMNS: Record<string, string> = {
  crb_ratios: "variant_id,scenario_id,lambda,bus_id,state_kind,assumed_var,true_var,rho",
  coverage: "variant_id,level,cov_wls,cov_true,n_scenarios",
  rmse: "variant_id,scenario_id,lambda,rmse_vmag",
};

function parseBody(text: string, schemaName: string): string[][] {
  const lines = text.split("\n");
  const header = lines[0];
  if (header === undefined) {
    throw new SchemaError("empty input");
  }
  const match = header.match(/^# crbsense csv-schema (\S+) (\S+)$/);
  if (!match) {
    throw new SchemaError(`missing schema header, got: ${header.slice(0, 80)}`);
  }
  const [, name, version] = match;
  if (name !== schemaName) {
    throw new SchemaError(`expected schema ${schemaName}, file carries ${name}`);
  }
  if (version !== SUPPORTED_VERSION) {
    throw new SchemaError(`unsupported ${name} schema version ${version} (want ${SUPPORTED_VERSION})`);
  }
  const columns = EXPECTED_COLUMNS[schemaName];
  if (columns === undefined) {
    throw new SchemaError(`no column definition for schema ${schemaName}`);
  }
  if (lines[1] !== columns) {
    throw new SchemaError(`unexpected ${name} columns: ${lines[1] ?? "<missing>"}`);
  }
  const rows = lines
    .slice(2)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
  if (rows.length === 0) {
    throw new SchemaError(`${name} file has no data rows`);
  }
  const width = columns.split(",").length;
  rows.forEach((cells, i) => {
    if (cells.length !== width) {
      throw new SchemaError(`${name} row ${i + 1} has ${cells.length} fields, want ${width}`);
    }
  });
  return rows;
}

function num(cell: string | undefined, what: string): number {
  const value = Number(cell);
  if (cell === undefined || cell === "" || Number.isNaN(value)) {
    throw new SchemaError(`non-numeric ${what}: ${cell}`);
  }
  return value;
}

export function parseCrbRatios(text: string): CrbRow[] {
  return parseBody(text, "crb_ratios").map((c) => {
    const kind = c[4];
    if (kind !== "theta" && kind !== "vmag") {
      throw new SchemaError(`unknown state_kind ${kind}`);
    }
    return {
      variantId: c[0] ?? "",
      scenarioId: num(c[1], "scenario_id"),
      lambda: num(c[2], "lambda"),
      busId: num(c[3], "bus_id"),
      stateKind: kind,
      assumedVar: num(c[5], "assumed_var"),
      trueVar: num(c[6], "true_var"),
      rho: num(c[7], "rho"),
    };
  });
}

export function parseCoverage(text: string): CoverageRow[] {
  return parseBody(text, "coverage").map((c) => ({
    variantId: c[0] ?? "",
    level: num(c[1], "level"),
    covWls: num(c[2], "cov_wls"),
    covTrue: num(c[3], "cov_true"),
    nScenarios: num(c[4], "n_scenarios"),
  }));
}

export function parseRmse(text: string): RmseRow[] {
  return parseBody(text, "rmse").map((c) => ({
    variantId: c[0] ?? "",
    scenarioId: num(c[1], "scenario_id"),
    lambda: num(c[2], "lambda"),
    rmseVmag: num(c[3], "rmse_vmag"),
  }));
}

/** Distinct variant ids in first-appearance order (the sweep's order). */
export function variantOrder(rows: { variantId: string }[]): string[] {
  const seen = new Set<string>();
  const order: string[] = [];
  for (const row of rows) {
    if (!seen.has(row.variantId)) {
      seen.add(row.variantId);
      order.push(row.variantId);
    }
  }
  return order;
}

export function familyOf(variantId: string): string {
  for (const family of ["biased_gaussian", "skew_normal", "student_t", "gaussian", "laplace"]) {
    if (variantId.startsWith(family)) {
      return family;
    }
  }
  return "other";
}
