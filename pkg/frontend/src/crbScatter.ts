/**
 * CRB-ratio scatter: one panel per variant, voltage-magnitude rho per bus,
 * one dot per (scenario, bus) colored by the loading factor, with a
 * reference line at rho = 1.
 */

import { CrbRow, variantOrder } from "./csv.js";
import { SvgBuilder, extentOf, fmt, lambdaColor, scale } from "./svg.js";

const PANEL_W = 340;
const PANEL_H = 180;
const MARGIN = { top: 28, right: 14, bottom: 32, left: 46 };
const COLS = 3;

export function renderCrbScatter(rows: CrbRow[]): string {
  const vmag = rows.filter((r) => r.stateKind === "vmag");
  const variants = variantOrder(vmag);
  const nCols = Math.min(COLS, variants.length);
  const nRows = Math.ceil(variants.length / nCols);
  const svg = new SvgBuilder(nCols * PANEL_W, nRows * PANEL_H + 16);
  svg.text(8, 12, "CRB ratio of |V| states per bus, colored by loading factor", 11);

  const rhoExtent = extentOf([1.0, ...vmag.map((r) => r.rho)]);
  variants.forEach((variantId, idx) => {
    const x0 = (idx % nCols) * PANEL_W;
    const y0 = Math.floor(idx / nCols) * PANEL_H + 16;
    drawPanel(
      svg,
      vmag.filter((r) => r.variantId === variantId),
      variantId,
      x0,
      y0,
      rhoExtent,
    );
  });
  return svg.render();
}

function drawPanel(
  svg: SvgBuilder,
  rows: CrbRow[],
  title: string,
  x0: number,
  y0: number,
  rhoExtent: { min: number; max: number },
): void {
  const left = x0 + MARGIN.left;
  const right = x0 + PANEL_W - MARGIN.right;
  const top = y0 + MARGIN.top;
  const bottom = y0 + PANEL_H - MARGIN.bottom;

  const buses = [...new Set(rows.map((r) => r.busId))].sort((a, b) => a - b);
  const busX = scale({ min: 0, max: Math.max(1, buses.length - 1) }, left + 8, right - 8);
  const rhoY = scale(rhoExtent, bottom, top);

  svg.text(x0 + PANEL_W / 2, y0 + 14, title, 10, "middle");
  // axes
  svg.line(left, top, left, bottom, "#999");
  svg.line(left, bottom, right, bottom, "#999");
  // reference line at rho = 1
  svg.line(left, rhoY(1.0), right, rhoY(1.0), "#c33", 1, "4,3");
  svg.text(right, rhoY(1.0) - 3, "rho = 1", 8, "end", "#c33");
  // y ticks
  for (const tick of yTicks(rhoExtent)) {
    svg.line(left - 3, rhoY(tick), left, rhoY(tick), "#999");
    svg.text(left - 5, rhoY(tick) + 3, fmt(tick, 2), 8, "end");
  }
  // x ticks: bus ids
  buses.forEach((bus, i) => {
    if (buses.length <= 16 || i % 2 === 0) {
      svg.text(busX(i), bottom + 12, String(bus), 8, "middle");
    }
  });
  svg.text((left + right) / 2, bottom + 24, "bus", 9, "middle");

  for (const row of rows) {
    const i = buses.indexOf(row.busId);
    svg.circle(busX(i), rhoY(row.rho), 1.8, lambdaColor(row.lambda), 0.75);
  }
}

function yTicks(extent: { min: number; max: number }): number[] {
  const span = extent.max - extent.min;
  const step = span > 0.5 ? 0.2 : span > 0.2 ? 0.1 : 0.05;
  const ticks: number[] = [];
  const start = Math.ceil(extent.min / step) * step;
  for (let t = start; t <= extent.max + 1e-12; t += step) {
    ticks.push(Number(t.toFixed(10)));
  }
  return ticks;
}
