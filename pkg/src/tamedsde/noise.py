"""Seedable Brownian increments on a fine grid, with exact aggregation to
nested coarser grids.

Determinism contract: increments for a path are a pure function of
(master_seed, path_id) — workers can generate paths in any order, in any
process, and get bit-identical arrays.  Each path owns a Philox counter-based
stream keyed by the pair (master_seed, path_id); normals come from
``numpy.random.Generator.standard_normal`` (ziggurat), drawn in C order, so
entry (k, j) is the (k*m + j)-th draw of the stream.

Aggregation sums fine increments inside each coarse interval with a pairwise
halving tree (padded with zeros up to the uniform grid covering ceil(T)).
Zero padding adds nothing in floating point, and the halving tree makes
nested aggregation exact: for power-of-two step ratios — the NoisePlan
contract — aggregating to n1 and then to n2 is bit-identical to aggregating
straight to n2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, TimeGrid

__all__ = ["NoisePlan", "IncrementArray", "generate_increments", "aggregate_increments"]


@dataclass(frozen=True)
class NoisePlan:
    """Recipe for one path's Wiener increments at the finest resolution.

    fine_n must be a power of two times every coarse n that will be
    aggregated against it (enforced at aggregation time).
    """

    master_seed: int
    path_id: int
    dim_noise: int
    fine_n: int
    horizon: float

    def __post_init__(self) -> None:
        if self.dim_noise < 1:
            raise DomainError(f"dim_noise must be >= 1, got {self.dim_noise}")
        if self.fine_n < 1:
            raise DomainError(f"fine_n must be >= 1, got {self.fine_n}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        for name in ("master_seed", "path_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise DomainError(f"{name} must fit in 64 unsigned bits, got {v}")


@dataclass(frozen=True)
class IncrementArray:
    """Wiener increments on a grid: entry (k, j) = W_j(t_{k+1}) - W_j(t_k).

    Arrays are frozen after construction; ``n`` is the grid's steps per unit
    time and ``horizon`` its T, so the array is self-describing for
    aggregation.
    """

    increments: np.ndarray
    step_sizes: np.ndarray
    n: int
    horizon: float

    def __post_init__(self) -> None:
        inc = np.asarray(self.increments, dtype=np.float64)
        steps = np.asarray(self.step_sizes, dtype=np.float64)
        if inc.ndim != 2:
            raise DomainError(f"increments must be 2-d (num_steps, m), got shape {inc.shape}")
        if steps.shape != (inc.shape[0],):
            raise DomainError(
                f"step_sizes shape {steps.shape} does not match {inc.shape[0]} steps"
            )
        if inc.shape[0] < 1:
            raise DomainError("increment array must contain at least one step")
        inc.setflags(write=False)
        steps.setflags(write=False)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "step_sizes", steps)

    @property
    def num_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def dim_noise(self) -> int:
        return self.increments.shape[1]


def generate_increments(plan: NoisePlan) -> IncrementArray:
    """Generate N(0, h_k I_m) increments for one path, deterministically.

    Bit-identical for identical plans, regardless of execution order or
    worker count.
    """
    grid = TimeGrid(plan.horizon, plan.fine_n)
    key = np.array([plan.master_seed, plan.path_id], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    h = grid.step_sizes
    raw = rng.standard_normal((grid.num_steps, plan.dim_noise))
    return IncrementArray(
        increments=raw * np.sqrt(h)[:, None],
        step_sizes=h,
        n=plan.fine_n,
        horizon=plan.horizon,
    )


def _halve(a: np.ndarray) -> np.ndarray:
    # Sum adjacent pairs along the step axis (first axis); length must be even.
    return a[0::2] + a[1::2]


def aggregate_to_padded(
    inc: np.ndarray, fine_n: int, coarse_n: int, horizon: float, axis: int = 0
) -> np.ndarray:
    """Sum fine increments into coarse intervals on the zero-padded uniform grid.

    Returns the padded coarse array of length coarse_n * ceil(T) along
    ``axis``; callers slice off the real steps.  Internal helper shared with
    the estimators, which aggregate whole path batches at once.
    """
    if fine_n % coarse_n != 0:
        raise DomainError(f"fine_n={fine_n} is not a multiple of coarse_n={coarse_n}")
    ratio = fine_n // coarse_n
    units = max(1, math.ceil(horizon - 1e-12))
    padded_len = fine_n * units
    out = np.moveaxis(np.asarray(inc), axis, 0)
    if out.shape[0] != padded_len:
        pad = np.zeros((padded_len - out.shape[0],) + out.shape[1:], dtype=out.dtype)
        out = np.concatenate([out, pad], axis=0)
    odd = ratio
    while odd % 2 == 0:
        out = _halve(out)
        odd //= 2
    if odd > 1:
        # Non-power-of-two remainder: sum sequentially.  Deterministic, but
        # nested reproducibility is only guaranteed for power-of-two chains
        # (the NoisePlan contract).
        out = np.add.reduceat(out, np.arange(0, out.shape[0], odd), axis=0)
    return np.moveaxis(out, 0, axis)


def aggregate_increments(fine: IncrementArray, coarse_n: int) -> IncrementArray:
    """Aggregate fine increments to a coarser nested grid.

    Coarse increment k is the exact sum of the fine increments inside
    [k/coarse_n, (k+1)/coarse_n]; the total over all steps is conserved.
    Raises DomainError if coarse_n does not divide the fine resolution.
    """
    if coarse_n < 1:
        raise DomainError(f"coarse_n must be >= 1, got {coarse_n}")
    if coarse_n == fine.n:
        return fine
    coarse_grid = TimeGrid(fine.horizon, coarse_n)
    padded = aggregate_to_padded(fine.increments, fine.n, coarse_n, fine.horizon)
    return IncrementArray(
        increments=padded[: coarse_grid.num_steps],
        step_sizes=coarse_grid.step_sizes,
        n=coarse_n,
        horizon=fine.horizon,
    )
