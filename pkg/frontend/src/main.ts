/**
 * Command-line entry point.
 *
 *   crbsense-plots crb-scatter    --input crb_ratios.csv --output crb.svg
 *   crbsense-plots rmse-strip     --input rmse.csv       --output rmse.svg
 *   crbsense-plots coverage-table --input coverage.csv   --output coverage.md
 *
 * Omitting --output writes to stdout.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { SchemaError, parseCoverage, parseCrbRatios, parseRmse } from "./csv.js";
import { renderCoverageTable } from "./coverageTable.js";
import { renderCrbScatter } from "./crbScatter.js";
import { renderRmseStrip } from "./rmseStrip.js";

const USAGE = `usage: crbsense-plots <kind> --input <file.csv> [--output <file>]

kinds:
  crb-scatter     per-variant CRB-ratio scatter SVG (crb_ratios.csv)
  rmse-strip      per-variant RMSE strip chart SVG (rmse.csv)
  coverage-table  markdown coverage table (coverage.csv)
`;

const RENDERERS: Record<string, (text: string) => string> = {
  "crb-scatter": (text) => renderCrbScatter(parseCrbRatios(text)),
  "rmse-strip": (text) => renderRmseStrip(parseRmse(text)),
  "coverage-table": (text) => renderCoverageTable(parseCoverage(text)),
};

export function main(argv: string[]): number {
  const [kind, ...rest] = argv;
  if (kind === undefined || kind === "--help" || kind === "-h") {
    process.stdout.write(USAGE);
    return kind === undefined ? 2 : 0;
  }
  const render = RENDERERS[kind];
  if (render === undefined) {
    process.stderr.write(`unknown kind: ${kind}\n${USAGE}`);
    return 2;
  }

  let input: string | undefined;
  let output: string | undefined;
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) {
      process.stderr.write(`missing value for ${flag}\n`);
      return 2;
    }
    if (flag === "--input") input = value;
    else if (flag === "--output") output = value;
    else {
      process.stderr.write(`unknown flag: ${flag}\n${USAGE}`);
      return 2;
    }
  }
  if (input === undefined) {
    process.stderr.write(`--input is required\n${USAGE}`);
    return 2;
  }

  let rendered: string;
  try {
    rendered = render(readFileSync(input, "utf8"));
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  if (output === undefined) {
    process.stdout.write(rendered);
  } else {
    writeFileSync(output, rendered);
  }
  return 0;
}

