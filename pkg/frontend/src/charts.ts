import type { Point } from "./state.js";

/** Minimal SVG chart building: pure string output, exact coordinate math. */

export interface ChartOptions {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_CHART: ChartOptions = { width: 360, height: 200, pad: 28 };

export function scaleLinear(
  domainMin: number,
  domainMax: number,
  rangeMin: number,
  rangeMax: number,
): (v: number) => number {
  const span = domainMax - domainMin;
  if (span === 0) {
    return () => (rangeMin + rangeMax) / 2;
  }
  return (v: number) => rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

/** Map data points into pixel space (y axis flipped, origin top-left). */
export function toPixels(points: Point[], opts: ChartOptions = DEFAULT_CHART): Point[] {
  if (points.length === 0) return [];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const sx = scaleLinear(Math.min(...xs), Math.max(...xs), opts.pad, opts.width - opts.pad);
  const sy = scaleLinear(Math.min(...ys), Math.max(...ys), opts.height - opts.pad, opts.pad);
  return points.map((p) => ({ x: sx(p.x), y: sy(p.y) }));
}

export function polylinePath(points: Point[], opts: ChartOptions = DEFAULT_CHART): string {
  const px = toPixels(points, opts);
  if (px.length === 0) return "";
  return px
    .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(2)},${p.y.toFixed(2)}`)
    .join(" ");
}

export function chartSvg(
  points: Point[],
  label: string,
  opts: ChartOptions = DEFAULT_CHART,
): string {
  const path = polylinePath(points, opts);
  const last = points.length ? points[points.length - 1] : null;
  const caption = last ? `${label}: ${last.y.toFixed(4)} @ budget ${last.x.toFixed(2)}` : label;
  return (
    `<svg viewBox="0 0 ${opts.width} ${opts.height}" class="chart">` +
    `<text x="${opts.pad}" y="16" class="chart-label">${caption}</text>` +
    (path ? `<path d="${path}" fill="none" stroke="currentColor" stroke-width="1.5"/>` : "") +
    `</svg>`
  );
}
