/**
 * Minimal deterministic SVG assembly: fixed styling, fixed number
 * formatting, no timestamps or random ids, so identical input always
 * yields identical bytes.
 */

export function fmt(x: number, digits = 2): string {
  // normalize negative zero so formatting is a pure function of value
  const v = Object.is(x, -0) ? 0 : x;
  return v.toFixed(digits);
}

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: number[], padFraction = 0.05): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  const span = max - min || 1;
  return { min: min - padFraction * span, max: max + padFraction * span };
}

export function scale(extent: Extent, rangeLo: number, rangeHi: number): (v: number) => number {
  const k = (rangeHi - rangeLo) / (extent.max - extent.min);
  return (v) => rangeLo + (v - extent.min) * k;
}

/** Blue (low) to red (high) ramp used for the loading factor lambda. */
export function lambdaColor(lambda: number, lo = 0.5, hi = 1.5): string {
  const t = Math.min(1, Math.max(0, (lambda - lo) / (hi - lo)));
  const r = Math.round(40 + t * 180);
  const g = Math.round(80 + (1 - Math.abs(t - 0.5) * 2) * 60);
  const b = Math.round(220 - t * 180);
  return `rgb(${r},${g},${b})`;
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    );
    this.parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string, opacity = 1): void {
    const o = opacity === 1 ? "" : ` fill-opacity="${fmt(opacity)}"`;
    this.parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r, 1)}" fill="${fill}"${o}/>`);
  }

  text(x: number, y: number, content: string, size = 10, anchor = "start", fill = "#333"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" ` +
        `fill="${fill}">${escapeXml(content)}</text>`,
    );
  }

  rotatedText(x: number, y: number, content: string, angle: number, size = 8, anchor = "end"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" fill="#333" ` +
        `transform="rotate(${angle} ${fmt(x)} ${fmt(y)})">${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
