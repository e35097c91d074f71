/** Strict reader for the harness CSV schemas. */

export type Row = Record<string, string>;

export interface Table {
  columns: string[];
  rows: Row[];
}

export class SchemaError extends Error {}

export const REQUIRED_COLUMNS: Record<string, string[]> = {
  convergence: ["n", "error", "std_error", "p", "M", "scheme", "alpha", "model"],
  moments: [
    "n",
    "p",
    "M",
    "moment_of_sup",
    "sup_of_moments",
    "divergence_fraction",
    "scheme",
    "alpha",
    "model",
  ],
  divergence: [
    "n",
    "M",
    "explicit_divergence_fraction",
    "tamed_divergence_fraction",
    "alpha",
    "model",
  ],
};

/** Parse harness CSV text: header row plus comma-separated values, no quoting. */
export function parseCsv(text: string): Table {
  const lines = text.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const columns = lines[0].split(",");
  const rows: Row[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `row has ${cells.length} cells but header has ${columns.length}: ${line}`,
      );
    }
    const row: Row = {};
    columns.forEach((name, i) => {
      row[name] = cells[i];
    });
    rows.push(row);
  }
  return { columns, rows };
}

/** Check a parsed table against a figure kind's schema; data rows required. */
export function validateSchema(table: Table, kind: string): void {
  const required = REQUIRED_COLUMNS[kind];
  if (required === undefined) {
    throw new SchemaError(`unknown figure kind "${kind}"`);
  }
  for (const column of required) {
    if (!table.columns.includes(column)) {
      throw new SchemaError(`missing column "${column}" for kind "${kind}"`);
    }
  }
  if (table.rows.length === 0) {
    throw new SchemaError("CSV contains no data rows");
  }
}

/** Numeric cell access; empty cells (euler's alpha) come back as null. */
export function num(row: Row, column: string): number {
  const raw = row[column];
  const value = Number(raw);
  if (raw === undefined || raw === "" || !Number.isFinite(value)) {
    throw new SchemaError(`column "${column}" holds non-numeric value "${raw}"`);
  }
  return value;
}

export function numOrNull(row: Row, column: string): number | null {
  const raw = row[column];
  if (raw === undefined || raw === "") {
    return null;
  }
  return num(row, column);
}
