#!/usr/bin/env python3
"""What the taming transform does to a drift vector.

The tamed scheme replaces b with b / (1 + n^{-alpha} |b|).  Small drifts pass
through almost untouched; huge drifts get capped near n^alpha, so one step
can never move the state by more than about n^{alpha-1}.
"""

import numpy as np

from tamedsde import SchemeSpec, make_cubic, step, tame_drift

print("taming b = [100] at alpha = 1/2:")
for n in (1, 4, 64, 4096):
    bn = tame_drift(np.array([100.0]), n, 0.5)
    print(f"  n={n:5d}: |b_n| = {np.linalg.norm(bn):9.4f}   cap n^alpha = {n**0.5:7.2f}")

print("\ntaming preserves direction (2-d example, |b| = 50):")
b = np.array([30.0, -40.0])
bn = tame_drift(b, 16, 0.5)
print(f"  b  = {b},  b_16 = {np.round(bn, 4)},  ratio = {np.round(bn / b, 6)}")

# One explicit vs one tamed step on the pure cubic drift b(x) = -x^3 from
# x = 2 with h = 1: explicit overshoots to -6, tamed takes a gentle step.
model = make_cubic(a=0.0, lam=1.0, c=0.0, x0=2.0)
x = np.array([2.0])
no_noise = np.array([0.0])
print("\none step from x = 2 under b(x) = -x^3, h = 1:")
print(f"  explicit Euler: {step(SchemeSpec.euler(), model, 0.0, x, 1.0, no_noise, 1)[0]:+.4f}")
print(f"  tamed Euler:    {step(SchemeSpec.tamed(), model, 0.0, x, 1.0, no_noise, 1)[0]:+.4f}")
