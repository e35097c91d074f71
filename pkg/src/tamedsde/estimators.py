"""Monte Carlo estimators: coupled strong error, uniform moment bounds,
one-step increment moments, rate fitting, and assumption spot checks.

Every estimator is a deterministic function of its inputs and the master
seed.  Paths are processed in fixed-size chunks (``BATCH_SIZE``) whose
partial results are reduced in chunk order, so the numbers are bit-identical
for any worker count; the ``workers`` argument only distributes chunks over
processes.  Coupling: the coarse schemes and the reference are driven by the
same fine Wiener increments, aggregated exactly to each coarse grid.

Paths that blow up (non-finite states) are excluded from means and counted
separately; a strong-error table whose exclusions exceed half the sample is
flagged invalid rather than reported as a number.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DomainError, SdeModel, TimeGrid, realize_initial
from .noise import NoisePlan, aggregate_to_padded, generate_increments
from .schemes import PathBatch, SchemeSpec

__all__ = [
    "BATCH_SIZE",
    "ErrorTable",
    "MomentReport",
    "RateFit",
    "SpotCheckViolation",
    "SpotCheckReport",
    "strong_error",
    "moment_sup",
    "increment_moment",
    "fit_rate",
    "spot_check_assumptions",
]

# Fixed path-chunk size.  Worker counts never change results; changing this
# constant can move per-time accumulators by an ulp or two.
BATCH_SIZE = 1024

MAX_DROPPED_FRACTION = 0.5


@dataclass(frozen=True)
class ErrorTable:
    """Per-n strong-error estimates (E[sup_k |X_ref - X_n|^p])^(1/p).

    ``std_errors`` are delta-method adjusted for the 1/p-th root
    (se(err) = mean^(1/p - 1)/p * se(mean)); ``stderr_method`` records that.
    ``valid`` is False when any n dropped more than half its paths to
    divergence.
    """

    n_values: tuple[int, ...]
    errors: np.ndarray
    std_errors: np.ndarray
    p: float
    num_paths: int
    reference: str
    scheme: SchemeSpec
    model: str
    fine_n: int
    dropped_fractions: np.ndarray
    valid: bool
    stderr_method: str = "delta"


@dataclass(frozen=True)
class MomentReport:
    """Uniform-moment estimates for one scheme resolution.

    moment_of_sup estimates E[sup_k |X(t_k)|^p]; sup_of_moments estimates
    sup_k E[|X(t_k)|^p].  Both average only paths that stayed finite;
    divergence_fraction counts the rest.
    """

    n: int
    p: float
    num_paths: int
    moment_of_sup: float
    sup_of_moments: float
    divergence_fraction: float


@dataclass(frozen=True)
class RateFit:
    """OLS fit of log(error) against log(n); the decay rate is -slope."""

    slope: float
    intercept: float
    r_squared: float

    @property
    def rate(self) -> float:
        return -self.slope


@dataclass(frozen=True)
class SpotCheckViolation:
    condition: str
    t: float
    x: np.ndarray
    y: np.ndarray | None
    lhs: float
    rhs: float


@dataclass(frozen=True)
class SpotCheckReport:
    """Falsification report for a model's declared assumption constants."""

    model: str
    num_samples: int
    radius: float
    checked: tuple[str, ...]
    skipped: tuple[str, ...]
    violations: tuple[SpotCheckViolation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# chunked execution


def _chunk_ranges(num_paths: int, batch_size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + batch_size, num_paths)) for lo in range(0, num_paths, batch_size)]


def _run_chunks(tasks: list[tuple], workers: int) -> list:
    if workers <= 1 or len(tasks) == 1:
        return [_chunk_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_chunk_worker, tasks))


def _chunk_worker(task: tuple):
    kind, args = task
    if kind == "strong_error":
        return _strong_error_chunk(*args)
    if kind == "moment_sup":
        return _moment_sup_chunk(*args)
    if kind == "increment_moment":
        return _increment_moment_chunk(*args)
    raise ValueError(f"unknown chunk kind {kind!r}")


def _batch_increments(
    model: SdeModel, master_seed: int, lo: int, hi: int, fine_n: int, horizon: float
) -> np.ndarray:
    """Stack per-path increment arrays into (B, num_steps, m)."""
    rows = [
        generate_increments(
            NoisePlan(master_seed, pid, model.dim_noise, fine_n, horizon)
        ).increments
        for pid in range(lo, hi)
    ]
    return np.stack(rows)


def _batch_initial(model: SdeModel, master_seed: int, lo: int, hi: int) -> np.ndarray:
    if not callable(model.initial_value):
        return np.broadcast_to(model.initial_value, (hi - lo, model.dim_state)).copy()
    return np.stack([realize_initial(model, master_seed, pid) for pid in range(lo, hi)])


def _coarse_point_fine_indices(fine_grid: TimeGrid, coarse_grid: TimeGrid) -> np.ndarray:
    """Fine-grid index of each coarse grid point (clamped T maps to the end)."""
    r = fine_grid.n // coarse_grid.n
    idx = np.arange(len(coarse_grid.points)) * r
    return np.minimum(idx, fine_grid.num_steps)


def _record_batch(
    spec: SchemeSpec,
    model: SdeModel,
    grid: TimeGrid,
    incs: np.ndarray,
    x0: np.ndarray,
    record_idx: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate a batch, recording states at the given grid-point indices.

    Returns (values (B, len(record_idx), d), alive_at_end (B,)).
    """
    batch = PathBatch(spec, model, grid, x0)
    slots = np.full(grid.num_steps + 1, -1, dtype=np.int64)
    slots[record_idx] = np.arange(len(record_idx))
    out = np.empty((incs.shape[0], len(record_idx), model.dim_state))
    if slots[0] >= 0:
        out[:, slots[0]] = batch.x
    for k in range(grid.num_steps):
        batch.advance(incs[:, k])
        if slots[k + 1] >= 0:
            out[:, slots[k + 1]] = batch.x
    return out, batch.alive.copy()


# ---------------------------------------------------------------------------
# strong error


def _strong_error_chunk(
    model: SdeModel,
    spec: SchemeSpec,
    n_values: tuple[int, ...],
    fine_n: int,
    p: float,
    horizon: float,
    master_seed: int,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, np.ndarray]:
    fine_grid = TimeGrid(horizon, fine_n)
    coarse_grids = [TimeGrid(horizon, n) for n in n_values]
    fine_idx = [_coarse_point_fine_indices(fine_grid, g) for g in coarse_grids]
    incs = _batch_increments(model, master_seed, lo, hi, fine_n, horizon)
    x0 = _batch_initial(model, master_seed, lo, hi)
    nb = hi - lo

    if model.exact_solution is not None:
        ref_on = None
        ref_alive = np.ones(nb, dtype=bool)
    else:
        union = np.unique(np.concatenate(fine_idx))
        ref_values, ref_alive = _record_batch(
            SchemeSpec.tamed(spec.alpha if spec.kind == "tamed" else 0.5),
            model,
            fine_grid,
            incs,
            x0,
            union,
        )
        pos = {int(k): i for i, k in enumerate(union)}
        ref_on = [ref_values[:, [pos[int(k)] for k in idx]] for idx in fine_idx]

    sup_pow = np.empty((nb, len(n_values)))
    ok = np.empty((nb, len(n_values)), dtype=bool)
    for i, (n, grid) in enumerate(zip(n_values, coarse_grids)):
        coarse_inc = aggregate_to_padded(incs, fine_n, n, horizon, axis=1)[
            :, : grid.num_steps
        ]
        all_pts = np.arange(grid.num_steps + 1)
        coarse_vals, coarse_alive = _record_batch(spec, model, grid, coarse_inc, x0, all_pts)
        if model.exact_solution is not None:
            w = np.concatenate(
                [np.zeros((nb, 1, model.dim_noise)), np.cumsum(coarse_inc, axis=1)], axis=1
            )
            ref = np.asarray(model.exact_solution(grid.points, w), dtype=np.float64)
        else:
            ref = ref_on[i]
        with np.errstate(over="ignore", invalid="ignore"):
            diff = np.linalg.norm(ref - coarse_vals, axis=-1)
            sup = diff.max(axis=1)
            sup_pow[:, i] = sup**p
        ok[:, i] = coarse_alive & ref_alive & np.isfinite(sup_pow[:, i])
    return sup_pow, ok


def strong_error(
    model: SdeModel,
    spec: SchemeSpec,
    n_values: Sequence[int],
    fine_n: int,
    p: float,
    num_paths: int,
    master_seed: int,
    *,
    horizon: float = 1.0,
    workers: int = 1,
    batch_size: int = BATCH_SIZE,
) -> ErrorTable:
    """Estimate the coupled strong error for each coarse resolution.

    Per path: fine increments are generated once, the reference built on them
    (closed form when the model has one, else the tamed scheme at fine_n),
    each coarse scheme driven by exactly aggregated increments, and the sup
    over coarse grid points of |X_ref - X_n| taken.  Errors are
    (mean of sup^p)^(1/p) over paths that stayed finite.
    """
    n_values = tuple(int(n) for n in n_values)
    if len(n_values) < 1 or list(n_values) != sorted(set(n_values)):
        raise DomainError(f"n_values must be strictly ascending, got {n_values}")
    for n in n_values:
        if fine_n % n != 0:
            raise DomainError(f"n={n} does not divide fine_n={fine_n}")
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    if num_paths < 2:
        raise DomainError(f"need at least 2 paths, got {num_paths}")

    tasks = [
        (
            "strong_error",
            (model, spec, n_values, fine_n, p, horizon, master_seed, lo, hi),
        )
        for lo, hi in _chunk_ranges(num_paths, batch_size)
    ]
    parts = _run_chunks(tasks, workers)
    sup_pow = np.concatenate([r[0] for r in parts], axis=0)
    ok = np.concatenate([r[1] for r in parts], axis=0)

    errors = np.empty(len(n_values))
    std_errors = np.empty(len(n_values))
    dropped = np.empty(len(n_values))
    for i in range(len(n_values)):
        vals = sup_pow[ok[:, i], i]
        dropped[i] = 1.0 - len(vals) / num_paths
        if len(vals) == 0:
            errors[i] = np.nan
            std_errors[i] = np.nan
            continue
        mean = float(np.mean(vals))
        se_mean = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        if mean == 0.0:
            errors[i] = 0.0
            std_errors[i] = 0.0
        else:
            errors[i] = mean ** (1.0 / p)
            std_errors[i] = mean ** (1.0 / p - 1.0) / p * se_mean
    reference = "closed-form" if model.exact_solution is not None else "tamed-at-fine-n"
    return ErrorTable(
        n_values=n_values,
        errors=errors,
        std_errors=std_errors,
        p=p,
        num_paths=num_paths,
        reference=reference,
        scheme=spec,
        model=model.name,
        fine_n=fine_n,
        dropped_fractions=dropped,
        valid=bool(np.all(dropped <= MAX_DROPPED_FRACTION)),
    )


# ---------------------------------------------------------------------------
# uniform moments


def _moment_sup_chunk(
    model: SdeModel,
    spec: SchemeSpec,
    n: int,
    p: float,
    horizon: float,
    master_seed: int,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, float, int, int]:
    grid = TimeGrid(horizon, n)
    incs = _batch_increments(model, master_seed, lo, hi, n, horizon)
    x0 = _batch_initial(model, master_seed, lo, hi)
    batch = PathBatch(spec, model, grid, x0)
    nb = hi - lo
    pow_t = np.empty((nb, grid.num_steps + 1))
    with np.errstate(over="ignore", invalid="ignore"):
        pow_t[:, 0] = np.linalg.norm(batch.x, axis=1) ** p
        for k in range(grid.num_steps):
            batch.advance(incs[:, k])
            pow_t[:, k + 1] = np.linalg.norm(batch.x, axis=1) ** p
    alive = batch.alive
    acc_time = pow_t[alive].sum(axis=0)
    sup_pow_sum = float(pow_t[alive].max(axis=1).sum()) if np.any(alive) else 0.0
    return acc_time, sup_pow_sum, int(alive.sum()), nb


def moment_sup(
    model: SdeModel,
    spec: SchemeSpec,
    n: int,
    p: float,
    num_paths: int,
    master_seed: int,
    *,
    horizon: float = 1.0,
    workers: int = 1,
    batch_size: int = BATCH_SIZE,
) -> MomentReport:
    """Estimate E[sup_k |X(t_k)|^p] and sup_k E[|X(t_k)|^p] on the grid.

    Diverged paths are excluded from both means and reported as a fraction.
    """
    if num_paths < 1:
        raise DomainError(f"need at least 1 path, got {num_paths}")
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    tasks = [
        ("moment_sup", (model, spec, n, p, horizon, master_seed, lo, hi))
        for lo, hi in _chunk_ranges(num_paths, batch_size)
    ]
    parts = _run_chunks(tasks, workers)
    acc_time = sum(r[0] for r in parts)
    sup_sum = sum(r[1] for r in parts)
    n_ok = sum(r[2] for r in parts)
    if n_ok == 0:
        moment_of_sup = float("nan")
        sup_of_moments = float("nan")
    else:
        moment_of_sup = sup_sum / n_ok
        sup_of_moments = float((acc_time / n_ok).max())
    return MomentReport(
        n=n,
        p=p,
        num_paths=num_paths,
        moment_of_sup=moment_of_sup,
        sup_of_moments=sup_of_moments,
        divergence_fraction=1.0 - n_ok / num_paths,
    )


# ---------------------------------------------------------------------------
# one-step increment moments


def _increment_moment_chunk(
    model: SdeModel,
    spec: SchemeSpec,
    n: int,
    fine_n: int,
    p: float,
    horizon: float,
    master_seed: int,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, int, int]:
    fine_grid = TimeGrid(horizon, fine_n)
    grid = TimeGrid(horizon, n)
    bounds = _coarse_point_fine_indices(fine_grid, grid)
    incs = _batch_increments(model, master_seed, lo, hi, fine_n, horizon)
    coarse_inc = aggregate_to_padded(incs, fine_n, n, horizon, axis=1)[:, : grid.num_steps]
    x0 = _batch_initial(model, master_seed, lo, hi)
    batch = PathBatch(spec, model, grid, x0)
    nb = hi - lo
    buf = np.zeros((nb, fine_grid.num_steps + 1))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(grid.num_steps):
            a, b_idx = int(bounds[k]), int(bounds[k + 1])
            bn, sig = batch.coefficients()
            seg = incs[:, a:b_idx]
            psum = np.cumsum(seg, axis=1)
            dt_off = fine_grid.points[a + 1 : b_idx + 1] - grid.points[k]
            delta = bn[:, None, :] * dt_off[None, :, None] + np.einsum(
                "bdm,bgm->bgd", sig, psum
            )
            buf[:, a + 1 : b_idx + 1] = np.linalg.norm(delta, axis=-1) ** p
            batch.advance(coarse_inc[:, k])
    alive = batch.alive
    acc = buf[alive].sum(axis=0)
    return acc, int(alive.sum()), nb


def increment_moment(
    model: SdeModel,
    spec: SchemeSpec,
    n: int,
    fine_n: int,
    p: float,
    num_paths: int,
    master_seed: int,
    *,
    horizon: float = 1.0,
    workers: int = 1,
    batch_size: int = BATCH_SIZE,
) -> float:
    """Estimate sup over fine-grid times of E|X_n(t) - X_n(kappa(t))|^p.

    The one-step displacement is evaluated at every fine time inside each
    coarse interval via the scheme's interpolant (frozen coefficients plus
    the exact Brownian partial sum), the mean is taken per time, and the sup
    of those means returned.
    """
    if p < 2:
        raise DomainError(f"increment moments need p >= 2, got {p}")
    if fine_n % n != 0:
        raise DomainError(f"n={n} does not divide fine_n={fine_n}")
    if num_paths < 1:
        raise DomainError(f"need at least 1 path, got {num_paths}")
    tasks = [
        ("increment_moment", (model, spec, n, fine_n, p, horizon, master_seed, lo, hi))
        for lo, hi in _chunk_ranges(num_paths, batch_size)
    ]
    parts = _run_chunks(tasks, workers)
    acc = sum(r[0] for r in parts)
    n_ok = sum(r[1] for r in parts)
    if n_ok == 0:
        return float("nan")
    return float((acc / n_ok).max())


# ---------------------------------------------------------------------------
# rate fitting


def fit_rate(table: ErrorTable) -> RateFit:
    """Least-squares fit of log(error) on log(n); rate = -slope.

    Needs at least three resolutions and strictly positive errors.
    """
    if len(table.n_values) < 3:
        raise DomainError("rate fitting needs at least 3 resolutions")
    errors = np.asarray(table.errors, dtype=np.float64)
    if not np.all(np.isfinite(errors)) or np.any(errors <= 0):
        raise DomainError(f"rate fitting needs positive finite errors, got {errors}")
    x = np.log(np.asarray(table.n_values, dtype=np.float64))
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)


# ---------------------------------------------------------------------------
# assumption spot checks


_CONDITIONS = ("coercivity", "one_sided", "diffusion_one_sided", "poly_lipschitz")
_MAX_REPORTED = 20
_REL_TOL = 1e-9


def _ball_samples(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal((count, dim))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    radii = radius * rng.random(count) ** (1.0 / dim)
    return direction * radii[:, None]


def _eval_batch(model: SdeModel, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if model.batch_coefficients:
        return (
            np.asarray(model.drift(t, x), dtype=np.float64),
            np.asarray(model.diffusion(t, x), dtype=np.float64),
        )
    b = np.stack([np.asarray(model.drift(t, row), dtype=np.float64) for row in x])
    s = np.stack([np.asarray(model.diffusion(t, row), dtype=np.float64) for row in x])
    return b, s


def spot_check_assumptions(
    model: SdeModel,
    num_samples: int = 10_000,
    radius: float = 100.0,
    seed: int = 0,
) -> SpotCheckReport:
    """Randomly probe the declared coercivity / one-sided constants.

    Samples (t, x, y) with x, y uniform in the ball of the given radius and
    t uniform in [0, 1], and reports every violation of the declared
    inequalities (beyond a 1e-9 relative slack).  Falsification only: a clean
    report is evidence, not proof.  Checks whose constants are undeclared are
    skipped and listed in the report.
    """
    meta = model.assumptions
    checked: list[str] = []
    skipped: list[str] = []
    violations: list[SpotCheckViolation] = []
    rng = np.random.default_rng(seed)
    d = model.dim_state

    do_coercivity = meta.coercivity_constant is not None
    do_one_sided = meta.one_sided_constant is not None
    do_poly = do_one_sided and meta.poly_degree is not None
    if do_coercivity:
        checked.append("coercivity")
    else:
        skipped.append("coercivity")
    if do_one_sided:
        checked.extend(["one_sided", "diffusion_one_sided"])
    else:
        skipped.extend(["one_sided", "diffusion_one_sided"])
    if do_poly:
        checked.append("poly_lipschitz")
    else:
        skipped.append("poly_lipschitz")
    if not checked:
        return SpotCheckReport(
            model=model.name,
            num_samples=num_samples,
            radius=radius,
            checked=(),
            skipped=tuple(skipped),
        )

    def record(cond: str, t: float, xs, ys, lhs, rhs) -> None:
        bad = lhs > rhs * (1.0 + _REL_TOL) + 1e-12
        for idx in np.flatnonzero(bad):
            if len(violations) >= _MAX_REPORTED:
                return
            violations.append(
                SpotCheckViolation(
                    condition=cond,
                    t=t,
                    x=xs[idx].copy(),
                    y=None if ys is None else ys[idx].copy(),
                    lhs=float(lhs[idx]),
                    rhs=float(rhs[idx]),
                )
            )

    num_t = 4
    per_t = max(1, num_samples // num_t)
    for t in rng.random(num_t):
        t = float(t)
        xs = _ball_samples(rng, per_t, d, radius)
        ys = _ball_samples(rng, per_t, d, radius)
        bx, sx = _eval_batch(model, t, xs)
        if do_coercivity:
            k = meta.coercivity_constant
            lhs = np.maximum(
                2.0 * np.sum(xs * bx, axis=1), np.sum(sx**2, axis=(1, 2))
            )
            rhs = k * (1.0 + np.sum(xs**2, axis=1))
            record("coercivity", t, xs, None, lhs, rhs)
        if do_one_sided:
            by, sy = _eval_batch(model, t, ys)
            big_l = meta.one_sided_constant
            gap2 = np.sum((xs - ys) ** 2, axis=1)
            lhs = np.sum((xs - ys) * (bx - by), axis=1)
            record("one_sided", t, xs, ys, lhs, big_l * gap2)
            lhs = np.sum((sx - sy) ** 2, axis=(1, 2))
            record("diffusion_one_sided", t, xs, ys, lhs, big_l * gap2)
            if do_poly:
                ell = meta.poly_degree
                gap = np.sqrt(gap2)
                growth = (
                    1.0
                    + np.linalg.norm(xs, axis=1) ** ell
                    + np.linalg.norm(ys, axis=1) ** ell
                )
                lhs = np.linalg.norm(bx - by, axis=1)
                record("poly_lipschitz", t, xs, ys, lhs, big_l * growth * gap)

    return SpotCheckReport(
        model=model.name,
        num_samples=num_samples,
        radius=radius,
        checked=tuple(checked),
        skipped=tuple(skipped),
        violations=tuple(violations),
    )
