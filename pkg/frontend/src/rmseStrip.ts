/**
 * RMSE strip chart: one column per variant, one dot per scenario colored by
 * the loading factor, with a tick at each variant's median.
 */

import { RmseRow, variantOrder } from "./csv.js";
import { SvgBuilder, extentOf, lambdaColor, scale } from "./svg.js";

const COL_W = 34;
const HEIGHT = 320;
const MARGIN = { top: 30, right: 16, bottom: 120, left: 62 };

export function renderRmseStrip(rows: RmseRow[]): string {
  const variants = variantOrder(rows);
  const width = MARGIN.left + variants.length * COL_W + MARGIN.right;
  const svg = new SvgBuilder(width, HEIGHT);
  const top = MARGIN.top;
  const bottom = HEIGHT - MARGIN.bottom;

  svg.text(8, 14, "Voltage-magnitude RMSE per scenario, colored by loading factor", 11);

  const ext = extentOf([0, ...rows.map((r) => r.rmseVmag)]);
  ext.min = 0;
  const y = scale(ext, bottom, top);
  svg.line(MARGIN.left, top, MARGIN.left, bottom, "#999");
  for (const tick of ticks(ext.max)) {
    svg.line(MARGIN.left - 3, y(tick), MARGIN.left, y(tick), "#999");
    svg.text(MARGIN.left - 5, y(tick) + 3, tick.toExponential(1), 8, "end");
  }
  svg.text(14, (top + bottom) / 2, "RMSE (p.u.)", 9, "middle");

  variants.forEach((variantId, idx) => {
    const cx = MARGIN.left + (idx + 0.5) * COL_W;
    const values = rows.filter((r) => r.variantId === variantId);
    for (const row of values) {
      // deterministic horizontal jitter from the scenario id
      const dx = ((row.scenarioId * 37) % 17) - 8;
      svg.circle(cx + dx * 0.8, y(row.rmseVmag), 1.6, lambdaColor(row.lambda), 0.7);
    }
    const med = median(values.map((r) => r.rmseVmag));
    svg.line(cx - 10, y(med), cx + 10, y(med), "#222", 1.5);
    svg.rotatedText(cx, bottom + 12, variantId, -55);
    svg.line(cx, bottom, cx, bottom + 4, "#999");
  });
  return svg.render();
}

function median(values: number[]): number {
  const s = [...values].sort((a, b) => a - b);
  const mid = Math.floor(s.length / 2);
  const lo = s[mid - 1];
  const hi = s[mid];
  if (s.length % 2 === 0 && lo !== undefined && hi !== undefined) {
    return (lo + hi) / 2;
  }
  return hi ?? 0;
}

function ticks(max: number): number[] {
  const out: number[] = [];
  for (let i = 0; i <= 4; i++) {
    out.push((max * i) / 4);
  }
  return out;
}
