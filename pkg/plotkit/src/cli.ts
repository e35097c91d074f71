#!/usr/bin/env node
/** plotkit: turn tamedsde harness CSVs into SVG figures.
 *
 * Usage:
 *   plotkit --input conv.csv [--input other.csv] --output fig.svg \
 *           --kind convergence [--title "..."] [--reference-slope 0.5]
 */

import { writeFileSync } from "fs";
import { pathToFileURL } from "url";
import { SchemaError } from "./csv.js";
import { FigureKind, FigureSpec, renderToString } from "./render.js";

const KINDS: FigureKind[] = ["convergence", "moments", "divergence"];

export function parseArgs(argv: string[]): FigureSpec {
  const inputs: string[] = [];
  let output: string | undefined;
  let kind: string | undefined;
  let title: string | undefined;
  let referenceSlope: number | undefined;
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        throw new SchemaError(`flag ${flag} needs a value`);
      }
      return argv[i];
    };
    switch (flag) {
      case "--input":
        inputs.push(next());
        break;
      case "--output":
        output = next();
        break;
      case "--kind":
        kind = next();
        break;
      case "--title":
        title = next();
        break;
      case "--reference-slope":
        referenceSlope = Number(next());
        if (!Number.isFinite(referenceSlope)) {
          throw new SchemaError("--reference-slope needs a number");
        }
        break;
      default:
        throw new SchemaError(`unknown flag ${flag}`);
    }
  }
  if (inputs.length === 0) {
    throw new SchemaError("--input is required");
  }
  if (output === undefined) {
    throw new SchemaError("--output is required");
  }
  if (kind === undefined || !KINDS.includes(kind as FigureKind)) {
    throw new SchemaError(`--kind must be one of ${KINDS.join(", ")}`);
  }
  return {
    inputPaths: inputs,
    outputPath: output,
    kind: kind as FigureKind,
    title,
    referenceSlope,
  };
}

export function run(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const svg = renderToString(spec);
    writeFileSync(spec.outputPath, svg);
    return 0;
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    console.error(`error: ${message}`);
    return 1;
  }
}

if (
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  process.exit(run(process.argv.slice(2)));
}
