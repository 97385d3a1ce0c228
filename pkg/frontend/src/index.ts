export {
  SchemaError,
  parseCoverage,
  parseCrbRatios,
  parseRmse,
  variantOrder,
  familyOf,
} from "./csv.js";
export type { CrbRow, CoverageRow, RmseRow } from "./csv.js";
export { renderCrbScatter } from "./crbScatter.js";
export { renderRmseStrip } from "./rmseStrip.js";
export { renderCoverageTable } from "./coverageTable.js";
export { main } from "./main.js";
