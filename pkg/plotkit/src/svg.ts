/** Minimal deterministic SVG assembly: fixed fonts, sizes and formatting. */

export const FONT = "Helvetica, Arial, sans-serif";

export function el(
  tag: string,
  attrs: Record<string, string | number>,
  children: string[] = [],
  text?: string,
): string {
  const parts = Object.entries(attrs)
    .map(([key, value]) => `${key}="${escapeAttr(String(value))}"`)
    .join(" ");
  const open = parts.length > 0 ? `<${tag} ${parts}>` : `<${tag}>`;
  if (children.length === 0 && text === undefined) {
    return parts.length > 0 ? `<${tag} ${parts}/>` : `<${tag}/>`;
  }
  const body = text !== undefined ? escapeText(text) : children.join("");
  return `${open}${body}</${tag}>`;
}

export function document(width: number, height: number, children: string[]): string {
  return [
    '<?xml version="1.0" encoding="UTF-8"?>',
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}">`,
    el("rect", { x: 0, y: 0, width, height, fill: "white" }),
    ...children,
    "</svg>",
  ].join("\n");
}

export function fmtCoord(v: number): string {
  return v.toFixed(2);
}

/** Tick label formatting: compact, locale-free. */
export function fmtTick(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
    const exp = Math.floor(Math.log10(Math.abs(v)));
    const mantissa = v / 10 ** exp;
    const m = Number(mantissa.toPrecision(3));
    return m === 1 ? `1e${exp}` : `${m}e${exp}`;
  }
  return String(Number(v.toPrecision(6)));
}

function escapeAttr(value: string): string {
  return value.replace(/&/g, "&amp;").replace(/"/g, "&quot;").replace(/</g, "&lt;");
}

function escapeText(value: string): string {
  return value.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
