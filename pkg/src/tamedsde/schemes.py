"""One-step maps and trajectory simulation for explicit and tamed Euler.

Both schemes freeze coefficients at the left endpoint of each grid interval.
The tamed scheme replaces the drift b with b/(1 + n^{-alpha}|b|), which is
what lets it survive superlinear drifts that blow the explicit scheme up.

Divergence is data, not an error: a step that produces non-finite values
returns them as-is, and `simulate` records the blow-up point in per-point
finite flags, freezing the state afterwards so no further arithmetic runs on
infinities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, SdeModel, TimeGrid, tame_drift
from .noise import IncrementArray

__all__ = ["SchemeSpec", "Trajectory", "step", "simulate", "interpolate", "PathBatch"]

KIND_EULER = "euler"
KIND_TAMED = "tamed"


@dataclass(frozen=True)
class SchemeSpec:
    """Scheme selector: plain explicit Euler, or tamed with exponent alpha."""

    kind: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_EULER, KIND_TAMED):
            raise DomainError(f"unknown scheme kind {self.kind!r}")
        if self.kind == KIND_TAMED:
            if self.alpha is None or not (0.0 < self.alpha <= 0.5):
                raise DomainError(f"tamed scheme needs alpha in (0, 1/2], got {self.alpha}")
        elif self.alpha is not None:
            raise DomainError("alpha is only meaningful for the tamed scheme")

    @classmethod
    def euler(cls) -> "SchemeSpec":
        return cls(KIND_EULER)

    @classmethod
    def tamed(cls, alpha: float = 0.5) -> "SchemeSpec":
        return cls(KIND_TAMED, alpha)


@dataclass(frozen=True)
class Trajectory:
    """Scheme states at the grid points, with per-point finiteness flags.

    ``finite[k]`` is False from the first grid point whose state has any
    non-finite coordinate onwards; values stop updating there.
    """

    values: np.ndarray
    finite: np.ndarray
    grid: TimeGrid

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        f = np.asarray(self.finite, dtype=bool)
        if v.ndim != 2 or v.shape[0] != len(self.grid.points):
            raise DomainError(
                f"values shape {v.shape} does not match grid with "
                f"{len(self.grid.points)} points"
            )
        if f.shape != (v.shape[0],):
            raise DomainError("finite flags must have one entry per grid point")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "finite", f)


class PathBatch:
    """Vectorized stepping of a batch of paths under one scheme and model.

    State has shape (B, d).  Rows that blow up are frozen: their recorded
    value keeps the first non-finite state, and a zeroed shadow state keeps
    the remaining arithmetic finite.  Single-path `simulate` runs on a batch
    of one, so there is exactly one stepping implementation.
    """

    def __init__(self, spec: SchemeSpec, model: SdeModel, grid: TimeGrid, x0: np.ndarray):
        x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
        if x0.shape[1] != model.dim_state:
            raise DomainError(
                f"x0 has state dimension {x0.shape[1]}, model wants {model.dim_state}"
            )
        self.spec = spec
        self.model = model
        self.grid = grid
        self.k = 0
        self.alive = np.all(np.isfinite(x0), axis=1)
        self._work = np.where(self.alive[:, None], x0, 0.0)
        self._record = x0.copy()
        self._coeff_cache: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def x(self) -> np.ndarray:
        """Recorded states at the current grid point, shape (B, d)."""
        return np.where(self.alive[:, None], self._work, self._record)

    def _eval_coefficients(self, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        model = self.model
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if model.batch_coefficients:
                b = np.asarray(model.drift(t, x), dtype=np.float64)
                sig = np.asarray(model.diffusion(t, x), dtype=np.float64)
            else:
                b = np.stack([np.asarray(model.drift(t, row), dtype=np.float64) for row in x])
                sig = np.stack(
                    [np.asarray(model.diffusion(t, row), dtype=np.float64) for row in x]
                )
        if b.shape != x.shape:
            raise DomainError(
                f"model {model.name!r}: drift returned shape {b.shape}, expected {x.shape}"
            )
        want = x.shape + (model.dim_noise,)
        if sig.shape != want:
            raise DomainError(
                f"model {model.name!r}: diffusion returned shape {sig.shape}, expected {want}"
            )
        return b, sig

    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Effective drift (tamed if applicable) and diffusion at the current point."""
        if self._coeff_cache is None:
            t = float(self.grid.points[self.k])
            b, sig = self._eval_coefficients(t, self._work)
            if self.spec.kind == KIND_TAMED:
                with np.errstate(over="ignore", invalid="ignore"):
                    norm = np.linalg.norm(b, axis=-1, keepdims=True)
                    b = b / (1.0 + float(self.grid.n) ** (-self.spec.alpha) * norm)
            self._coeff_cache = (b, sig)
        return self._coeff_cache

    def advance(self, dw: np.ndarray) -> None:
        """Advance one grid step using (B, m) Wiener increments."""
        if self.k >= self.grid.num_steps:
            raise DomainError("batch already at the final grid point")
        b, sig = self.coefficients()
        h = float(self.grid.step_sizes[self.k])
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = self._work + b * h + np.einsum("bdm,bm->bd", sig, dw)
        ok = np.all(np.isfinite(nxt), axis=1)
        newly_dead = self.alive & ~ok
        if np.any(newly_dead):
            self._record[newly_dead] = nxt[newly_dead]
            self.alive = self.alive & ok
        self._work = np.where(self.alive[:, None], nxt, 0.0)
        self.k += 1
        self._coeff_cache = None


def step(
    spec: SchemeSpec,
    model: SdeModel,
    t_k: float,
    x: np.ndarray,
    h: float,
    dw: np.ndarray,
    n: int,
) -> np.ndarray:
    """One scheme step from state x over a step of length h.

    The taming exponent acts through ``n`` (steps per unit time), not h, so
    a clamped final step is tamed like any other.  Non-finite results are
    returned as-is; shape mismatches raise DomainError.
    """
    if h <= 0:
        raise DomainError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    dw = np.asarray(dw, dtype=np.float64)
    if x.shape != (model.dim_state,):
        raise DomainError(f"x has shape {x.shape}, model wants ({model.dim_state},)")
    if dw.shape != (model.dim_noise,):
        raise DomainError(f"dw has shape {dw.shape}, model wants ({model.dim_noise},)")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        b = np.asarray(model.drift(t_k, x), dtype=np.float64)
        sig = np.asarray(model.diffusion(t_k, x), dtype=np.float64)
        if np.all(np.isfinite(b)) and spec.kind == KIND_TAMED:
            b = tame_drift(b, n, spec.alpha)
        elif spec.kind == KIND_TAMED:
            norm = np.linalg.norm(b, axis=-1, keepdims=True)
            b = b / (1.0 + float(n) ** (-spec.alpha) * norm)
        return x + b * h + sig @ dw


def simulate(
    spec: SchemeSpec,
    model: SdeModel,
    grid: TimeGrid,
    noise: IncrementArray,
    x0: np.ndarray | None = None,
) -> Trajectory:
    """Run the scheme over the whole grid, driven by matching increments.

    ``noise`` must be at the grid's resolution (aggregate first if needed).
    x0 defaults to the model's deterministic initial value.
    """
    if noise.n != grid.n or noise.num_steps != grid.num_steps:
        raise DomainError(
            f"noise resolution (n={noise.n}, steps={noise.num_steps}) does not match "
            f"grid (n={grid.n}, steps={grid.num_steps})"
        )
    if noise.dim_noise != model.dim_noise:
        raise DomainError(
            f"noise dimension {noise.dim_noise} does not match model m={model.dim_noise}"
        )
    if x0 is None:
        if callable(model.initial_value):
            raise DomainError(
                "model has a random initial value; pass an explicit x0 "
                "(see core.realize_initial)"
            )
        x0 = model.initial_value
    batch = PathBatch(spec, model, grid, np.asarray(x0, dtype=np.float64)[None, :])
    values = np.empty((grid.num_steps + 1, model.dim_state))
    finite = np.empty(grid.num_steps + 1, dtype=bool)
    values[0] = batch.x[0]
    finite[0] = batch.alive[0]
    for k in range(grid.num_steps):
        batch.advance(noise.increments[k][None, :])
        values[k + 1] = batch.x[0]
        finite[k + 1] = batch.alive[0]
    return Trajectory(values=values, finite=finite, grid=grid)


def interpolate(
    spec: SchemeSpec,
    model: SdeModel,
    grid: TimeGrid,
    fine_noise: IncrementArray,
    trajectory: Trajectory,
    t: float,
) -> np.ndarray:
    """Scheme value at a fine-grid time t between coarse grid points.

    Extends the trajectory with coefficients frozen at kappa(t) and the exact
    Brownian partial sum W(t) - W(kappa(t)) read off the fine increments.
    Only fine-grid times are allowed; noise is never interpolated.
    """
    fine_grid = TimeGrid(grid.horizon, fine_noise.n)
    j = fine_grid.index_of(t)  # DomainError if t is off the fine grid
    if fine_noise.n % grid.n != 0:
        raise DomainError(
            f"fine resolution {fine_noise.n} is not a multiple of coarse n={grid.n}"
        )
    if t == grid.points[-1]:
        # the stored final state is the interpolant at T (exact even when
        # the last step is clamped short)
        return trajectory.values[-1].copy()
    kap = grid.kappa(t)
    k = grid.index_of(kap)
    if t == kap:
        return trajectory.values[k].copy()
    x_k = trajectory.values[k]
    j_k = fine_grid.index_of(kap)
    dw = np.add.reduce(fine_noise.increments[j_k:j], axis=0)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        b = np.asarray(model.drift(kap, x_k), dtype=np.float64)
        if spec.kind == KIND_TAMED:
            norm = np.linalg.norm(b, axis=-1, keepdims=True)
            b = b / (1.0 + float(grid.n) ** (-spec.alpha) * norm)
        sig = np.asarray(model.diffusion(kap, x_k), dtype=np.float64)
        return x_k + b * (t - kap) + sig @ dw
