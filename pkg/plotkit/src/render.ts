/** Figure builders: harness CSV in, deterministic SVG out. */

import { readFileSync } from "fs";
import { num, numOrNull, parseCsv, Row, SchemaError, Table, validateSchema } from "./csv.js";
import { fitLogLog, RateFit } from "./ols.js";
import { document, el, fmtCoord, fmtTick, FONT } from "./svg.js";

export type FigureKind = "convergence" | "moments" | "divergence";

export interface FigureSpec {
  inputPaths: string[];
  outputPath: string;
  kind: FigureKind;
  title?: string;
  referenceSlope?: number;
}

const WIDTH = 720;
const HEIGHT = 540;
const MARGIN = { left: 78, right: 36, top: 56, bottom: 64 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const MARKERS = ["circle", "square", "diamond", "triangle"] as const;

const plotW = WIDTH - MARGIN.left - MARGIN.right;
const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

interface Series {
  label: string;
  n: number[];
  values: number[];
  stdErrors: number[];
  fit: RateFit;
}

export function renderToString(spec: FigureSpec): string {
  const tables = spec.inputPaths.map((path) => {
    const table = parseCsv(readFileSync(path, "utf8"));
    validateSchema(table, spec.kind);
    return table;
  });
  if (tables.length === 0) {
    throw new SchemaError("at least one input CSV is required");
  }
  switch (spec.kind) {
    case "convergence":
      return renderConvergence(tables, spec);
    case "moments":
      return renderMoments(tables[0], spec);
    case "divergence":
      return renderDivergence(tables[0], spec);
  }
}

// ---------------------------------------------------------------------------
// convergence: log-log error plot with fitted and reference slopes

function seriesFrom(table: Table, fallback: string): Series {
  const n = table.rows.map((r) => num(r, "n"));
  const values = table.rows.map((r) => num(r, "error"));
  const stdErrors = table.rows.map((r) => num(r, "std_error"));
  const first = table.rows[0];
  const alpha = numOrNull(first, "alpha");
  const scheme = first["scheme"] + (alpha === null ? "" : ` (a=${alpha})`);
  return {
    label: `${first["model"]}, ${scheme}` || fallback,
    n,
    values,
    stdErrors,
    fit: fitLogLog(n, values),
  };
}

function renderConvergence(tables: Table[], spec: FigureSpec): string {
  const series = tables.map((t, i) => seriesFrom(t, `series ${i}`));
  const allN = series.flatMap((s) => s.n);
  const lows = series.flatMap((s) => s.values.map((v, i) => Math.max(v - s.stdErrors[i], v / 3)));
  const highs = series.flatMap((s) => s.values.map((v, i) => v + s.stdErrors[i]));
  const xDomain: [number, number] = [Math.min(...allN) / 1.35, Math.max(...allN) * 1.35];
  const yDomain: [number, number] = [Math.min(...lows) / 1.6, Math.max(...highs) * 1.6];
  const sx = (v: number) =>
    MARGIN.left + ((Math.log10(v) - Math.log10(xDomain[0])) /
      (Math.log10(xDomain[1]) - Math.log10(xDomain[0]))) * plotW;
  const sy = (v: number) =>
    MARGIN.top + plotH - ((Math.log10(v) - Math.log10(yDomain[0])) /
      (Math.log10(yDomain[1]) - Math.log10(yDomain[0]))) * plotH;

  const parts: string[] = [];
  parts.push(frame(spec.title ?? "strong error vs resolution"));
  parts.push(axisLabels("n (steps per unit time)", "strong error"));

  // ticks: x at the data resolutions, y at decades and 2/5 mantissas
  for (const n of [...new Set(allN)].sort((a, b) => a - b)) {
    const x = sx(n);
    parts.push(line(x, MARGIN.top, x, MARGIN.top + plotH, "#dddddd", 1));
    parts.push(tickText(x, MARGIN.top + plotH + 18, fmtTick(n), "middle"));
  }
  for (const y of logTicks(yDomain)) {
    const yy = sy(y);
    parts.push(line(MARGIN.left, yy, MARGIN.left + plotW, yy, "#dddddd", 1));
    parts.push(tickText(MARGIN.left - 8, yy + 4, fmtTick(y), "end"));
  }
  parts.push(plotBorder());

  // reference slope guide, anchored below the first series
  if (spec.referenceSlope !== undefined) {
    const s0 = series[0];
    const anchorN = s0.n[0];
    const anchorV = s0.values[0] * 0.55;
    const ref = (n: number) => anchorV * (n / anchorN) ** -spec.referenceSlope!;
    parts.push(
      el("line", {
        x1: fmtCoord(sx(xDomain[0] * 1.12)),
        y1: fmtCoord(sy(ref(xDomain[0] * 1.12))),
        x2: fmtCoord(sx(xDomain[1] / 1.12)),
        y2: fmtCoord(sy(ref(xDomain[1] / 1.12))),
        stroke: "#888888",
        "stroke-width": 1.2,
        "stroke-dasharray": "6,4",
      }),
    );
    parts.push(
      el(
        "text",
        {
          x: fmtCoord(sx(s0.n[s0.n.length - 1])),
          y: fmtCoord(sy(ref(s0.n[s0.n.length - 1])) + 16),
          "font-family": FONT,
          "font-size": 12,
          fill: "#666666",
        },
        [],
        `slope -${fmtTick(spec.referenceSlope)}`,
      ),
    );
  }

  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    // fitted line across the data range
    const fitY = (n: number) => Math.exp(s.fit.intercept + s.fit.slope * Math.log(n));
    parts.push(
      el("line", {
        x1: fmtCoord(sx(s.n[0])),
        y1: fmtCoord(sy(fitY(s.n[0]))),
        x2: fmtCoord(sx(s.n[s.n.length - 1])),
        y2: fmtCoord(sy(fitY(s.n[s.n.length - 1]))),
        stroke: color,
        "stroke-width": 1.4,
        opacity: 0.8,
      }),
    );
    s.n.forEach((n, i) => {
      const x = sx(n);
      const lo = sy(Math.max(s.values[i] - s.stdErrors[i], yDomain[0]));
      const hi = sy(s.values[i] + s.stdErrors[i]);
      parts.push(line(x, hi, x, lo, color, 1.2));
      parts.push(line(x - 4, hi, x + 4, hi, color, 1.2));
      parts.push(line(x - 4, lo, x + 4, lo, color, 1.2));
      parts.push(marker(MARKERS[idx % MARKERS.length], x, sy(s.values[i]), color));
    });
  });

  // rate annotation (first series) and legend
  const head = series[0].fit;
  parts.push(
    el(
      "text",
      {
        x: fmtCoord(MARGIN.left + plotW - 8),
        y: fmtCoord(MARGIN.top + 22),
        "font-family": FONT,
        "font-size": 16,
        "text-anchor": "end",
        "data-rate": head.rate.toPrecision(15),
        "data-r-squared": head.rSquared.toPrecision(15),
      },
      [],
      `rate = ${head.rate.toFixed(3)} (r² = ${head.rSquared.toFixed(3)})`,
    ),
  );
  series.forEach((s, idx) => {
    const y = MARGIN.top + 44 + idx * 18;
    const color = PALETTE[idx % PALETTE.length];
    parts.push(marker(MARKERS[idx % MARKERS.length], MARGIN.left + plotW - 150, y - 4, color));
    parts.push(
      el(
        "text",
        {
          x: fmtCoord(MARGIN.left + plotW - 140),
          y: fmtCoord(y),
          "font-family": FONT,
          "font-size": 12,
          "text-anchor": "start",
        },
        [],
        `${s.label}: rate ${s.fit.rate.toFixed(3)}`,
      ),
    );
  });
  return document(WIDTH, HEIGHT, parts);
}

// ---------------------------------------------------------------------------
// moments / divergence: grouped bar charts

function renderMoments(table: Table, spec: FigureSpec): string {
  const rows = table.rows;
  const labels = ["E[sup|X|^p]", "sup E[|X|^p]"];
  const value = (r: Row, which: number) =>
    which === 0 ? num(r, "moment_of_sup") : num(r, "sup_of_moments");
  const extra = (r: Row) => {
    const frac = num(r, "divergence_fraction");
    return frac > 0 ? `diverged ${(100 * frac).toFixed(1)}%` : "";
  };
  return groupedBars(rows, labels, value, extra, spec, "moment estimate");
}

function renderDivergence(table: Table, spec: FigureSpec): string {
  const labels = ["explicit Euler", "tamed Euler"];
  const value = (r: Row, which: number) =>
    which === 0
      ? num(r, "explicit_divergence_fraction")
      : num(r, "tamed_divergence_fraction");
  return groupedBars(table.rows, labels, value, () => "", spec, "divergence fraction");
}

function groupedBars(
  rows: Row[],
  labels: string[],
  value: (row: Row, which: number) => number,
  note: (row: Row) => string,
  spec: FigureSpec,
  yLabel: string,
): string {
  const maxVal = Math.max(
    ...rows.flatMap((r) => labels.map((_, which) => value(r, which))),
    1e-12,
  );
  const yTop = maxVal * 1.18;
  const sy = (v: number) => MARGIN.top + plotH - (v / yTop) * plotH;
  const groupW = plotW / rows.length;
  const barW = Math.min(42, (groupW * 0.72) / labels.length);

  const parts: string[] = [];
  parts.push(frame(spec.title ?? yLabel));
  parts.push(axisLabels("n (steps per unit time)", yLabel));
  for (const tick of linearTicks(yTop)) {
    const yy = sy(tick);
    parts.push(line(MARGIN.left, yy, MARGIN.left + plotW, yy, "#dddddd", 1));
    parts.push(tickText(MARGIN.left - 8, yy + 4, fmtTick(tick), "end"));
  }
  parts.push(plotBorder());
  rows.forEach((row, g) => {
    const cx = MARGIN.left + groupW * (g + 0.5);
    labels.forEach((_, which) => {
      const v = value(row, which);
      const x = cx + (which - labels.length / 2) * barW;
      parts.push(
        el("rect", {
          x: fmtCoord(x),
          y: fmtCoord(sy(v)),
          width: fmtCoord(barW - 3),
          height: fmtCoord(Math.max(0, MARGIN.top + plotH - sy(v))),
          fill: PALETTE[which % PALETTE.length],
          opacity: 0.85,
        }),
      );
    });
    parts.push(tickText(cx, MARGIN.top + plotH + 18, row["n"], "middle"));
    const annotation = note(row);
    if (annotation) {
      parts.push(tickText(cx, MARGIN.top + 16, annotation, "middle"));
    }
  });
  labels.forEach((label, which) => {
    const y = MARGIN.top + 20 + which * 18;
    parts.push(
      el("rect", {
        x: fmtCoord(MARGIN.left + plotW - 160),
        y: fmtCoord(y - 10),
        width: 12,
        height: 12,
        fill: PALETTE[which % PALETTE.length],
      }),
    );
    parts.push(
      el(
        "text",
        {
          x: fmtCoord(MARGIN.left + plotW - 142),
          y: fmtCoord(y),
          "font-family": FONT,
          "font-size": 12,
        },
        [],
        label,
      ),
    );
  });
  return document(WIDTH, HEIGHT, parts);
}

// ---------------------------------------------------------------------------
// shared scaffolding

function frame(title: string): string {
  return el(
    "text",
    {
      x: fmtCoord(MARGIN.left),
      y: fmtCoord(MARGIN.top - 24),
      "font-family": FONT,
      "font-size": 18,
    },
    [],
    title,
  );
}

function axisLabels(xLabel: string, yLabel: string): string {
  return [
    el(
      "text",
      {
        x: fmtCoord(MARGIN.left + plotW / 2),
        y: fmtCoord(HEIGHT - 16),
        "font-family": FONT,
        "font-size": 14,
        "text-anchor": "middle",
      },
      [],
      xLabel,
    ),
    el(
      "text",
      {
        x: 20,
        y: fmtCoord(MARGIN.top + plotH / 2),
        "font-family": FONT,
        "font-size": 14,
        "text-anchor": "middle",
        transform: `rotate(-90 20 ${fmtCoord(MARGIN.top + plotH / 2)})`,
      },
      [],
      yLabel,
    ),
  ].join("");
}

function plotBorder(): string {
  return el("rect", {
    x: MARGIN.left,
    y: MARGIN.top,
    width: plotW,
    height: plotH,
    fill: "none",
    stroke: "#333333",
    "stroke-width": 1,
  });
}

function line(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  stroke: string,
  width: number,
): string {
  return el("line", {
    x1: fmtCoord(x1),
    y1: fmtCoord(y1),
    x2: fmtCoord(x2),
    y2: fmtCoord(y2),
    stroke,
    "stroke-width": width,
  });
}

function tickText(x: number, y: number, label: string, anchor: string): string {
  return el(
    "text",
    {
      x: fmtCoord(x),
      y: fmtCoord(y),
      "font-family": FONT,
      "font-size": 12,
      "text-anchor": anchor,
    },
    [],
    label,
  );
}

function marker(shape: (typeof MARKERS)[number], x: number, y: number, color: string): string {
  switch (shape) {
    case "circle":
      return el("circle", { cx: fmtCoord(x), cy: fmtCoord(y), r: 4, fill: color });
    case "square":
      return el("rect", {
        x: fmtCoord(x - 3.5),
        y: fmtCoord(y - 3.5),
        width: 7,
        height: 7,
        fill: color,
      });
    case "diamond":
      return el("rect", {
        x: fmtCoord(x - 3.5),
        y: fmtCoord(y - 3.5),
        width: 7,
        height: 7,
        fill: color,
        transform: `rotate(45 ${fmtCoord(x)} ${fmtCoord(y)})`,
      });
    case "triangle":
      return el("polygon", {
        points: `${fmtCoord(x)},${fmtCoord(y - 4)} ${fmtCoord(x - 4)},${fmtCoord(y + 3.5)} ${fmtCoord(x + 4)},${fmtCoord(y + 3.5)}`,
        fill: color,
      });
  }
}

function logTicks([lo, hi]: [number, number]): number[] {
  const ticks: number[] = [];
  const start = Math.floor(Math.log10(lo));
  const end = Math.ceil(Math.log10(hi));
  for (let exp = start; exp <= end; exp++) {
    for (const mantissa of [1, 2, 5]) {
      const v = mantissa * 10 ** exp;
      if (v >= lo && v <= hi) {
        ticks.push(v);
      }
    }
  }
  return ticks;
}

function linearTicks(top: number): number[] {
  const rawStep = top / 5;
  const exp = Math.floor(Math.log10(rawStep));
  const base = rawStep / 10 ** exp;
  const step = (base < 1.5 ? 1 : base < 3.5 ? 2 : base < 7.5 ? 5 : 10) * 10 ** exp;
  const ticks: number[] = [];
  for (let v = 0; v <= top + 1e-12; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}
