import { describe, expect, it } from "vitest";
import { fitLogLog } from "../src/ols.js";

describe("fitLogLog", () => {
  it("recovers an exact half-order power law", () => {
    const n = [4, 16, 64];
    const fit = fitLogLog(n, n.map((v) => v ** -0.5));
    expect(fit.rate).toBeCloseTo(0.5, 12);
    expect(fit.rSquared).toBeCloseTo(1.0, 12);
  });

  it("recovers slope and intercept of 3/n", () => {
    const n = [4, 16, 64];
    const fit = fitLogLog(n, n.map((v) => 3 / v));
    expect(fit.rate).toBeCloseTo(1.0, 12);
    expect(fit.intercept).toBeCloseTo(Math.log(3), 12);
  });

  it("matches the harness OLS on a frozen table", () => {
    // Values and fit from a tamedsde run (numpy polyfit on the same logs);
    // the two implementations must agree far beyond 1e-9.
    const n = [32, 64, 128, 256, 512];
    const errors = [
      0.22853103279635987,
      0.16194508764832693,
      0.11201108479999907,
      0.07551193540647216,
      0.04910248644227569,
    ];
    const fit = fitLogLog(n, errors);
    expect(Math.abs(fit.rate - 0.5537772305754457)).toBeLessThan(1e-9);
    expect(Math.abs(fit.intercept - 0.4703341162407858)).toBeLessThan(1e-9);
  });

  it("rejects degenerate inputs", () => {
    expect(() => fitLogLog([4, 8], [1, 2])).toThrow();
    expect(() => fitLogLog([4, 8, 16], [1, 0, 2])).toThrow();
  });
});
