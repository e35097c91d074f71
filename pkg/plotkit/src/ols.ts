/** Ordinary least squares on (log n, log error) — the same fit definition
 * the harness uses, so annotated rates agree with its RateFit.
 */

export interface RateFit {
  slope: number;
  intercept: number;
  rSquared: number;
  rate: number;
}

export function fitLogLog(nValues: number[], errors: number[]): RateFit {
  if (nValues.length !== errors.length || nValues.length < 3) {
    throw new Error("rate fitting needs at least 3 (n, error) pairs");
  }
  if (errors.some((e) => !(e > 0) || !Number.isFinite(e))) {
    throw new Error("rate fitting needs positive finite errors");
  }
  const x = nValues.map(Math.log);
  const y = errors.map(Math.log);
  const xBar = mean(x);
  const yBar = mean(y);
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < x.length; i++) {
    sxx += (x[i] - xBar) * (x[i] - xBar);
    sxy += (x[i] - xBar) * (y[i] - yBar);
  }
  const slope = sxy / sxx;
  const intercept = yBar - slope * xBar;
  let ssRes = 0;
  let ssTot = 0;
  for (let i = 0; i < x.length; i++) {
    const fitted = slope * x[i] + intercept;
    ssRes += (y[i] - fitted) * (y[i] - fitted);
    ssTot += (y[i] - yBar) * (y[i] - yBar);
  }
  const rSquared = ssTot === 0 && ssRes === 0 ? 1 : 1 - ssRes / ssTot;
  return { slope, intercept, rSquared, rate: -slope };
}

function mean(values: number[]): number {
  let total = 0;
  for (const v of values) {
    total += v;
  }
  return total / values.length;
}
