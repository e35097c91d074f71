"""Model and time-grid primitives: SDE coefficient containers, the uniform
grid with its left-endpoint projection, and the drift-taming transform.

The taming transform rescales a drift vector b by 1/(1 + n^{-alpha} |b|),
which caps each step's drift increment at n^{alpha - 1} while leaving small
drifts essentially untouched.  Everything here is immutable and safe to
share across worker processes; coefficient callables are expected to be
pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "NumericError",
    "AssumptionMetadata",
    "SdeModel",
    "TimeGrid",
    "tame_drift",
    "eval_drift",
    "eval_diffusion",
    "realize_initial",
]

# Key offset for initial-value samplers so X(0) draws never alias the
# increment streams, which are keyed (master_seed, path_id) directly.
INITIAL_VALUE_KEY_SALT = 0x9E3779B97F4A7C15


class DomainError(ValueError):
    """An argument violates a documented precondition."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values where finite ones are required."""


@dataclass(frozen=True)
class AssumptionMetadata:
    """Author-declared regularity constants for a model's coefficients.

    The flags are declarations, not verified facts; see
    :func:`tamedsde.estimators.spot_check_assumptions` for randomized
    falsification of the declared constants.

    coercivity_constant
        K with max(2 x.b(t,x), |sigma(t,x)|_F^2) <= K (1 + |x|^2), or None.
    one_sided_constant
        L with (x-y).(b(t,x)-b(t,y)) <= L |x-y|^2 and
        |sigma(t,x)-sigma(t,y)|_F^2 <= L |x-y|^2, or None.
    poly_degree
        l with |b(t,x)-b(t,y)| <= L (1 + |x|^l + |y|^l) |x-y|, or None.
    """

    coercivity_constant: float | None = None
    one_sided_constant: float | None = None
    poly_degree: float | None = None
    coercive: bool = False
    locally_one_sided: bool = False
    drift_locally_bounded: bool = False
    one_sided_poly_lipschitz: bool = False

    def __post_init__(self) -> None:
        for name in ("coercivity_constant", "one_sided_constant", "poly_degree"):
            v = getattr(self, name)
            if v is not None and (not math.isfinite(v) or v < 0):
                raise DomainError(f"{name} must be a nonnegative finite real, got {v!r}")
        if self.one_sided_poly_lipschitz and (
            self.one_sided_constant is None or self.poly_degree is None
        ):
            raise DomainError(
                "declaring the one-sided polynomial-Lipschitz drift condition "
                "requires one_sided_constant and poly_degree"
            )


@dataclass(frozen=True)
class SdeModel:
    """An Ito SDE dX = b(t, X) dt + sigma(t, X) dW with metadata.

    Parameters
    ----------
    name
        Short identifier, used in error messages and CSV output.
    dim_state, dim_noise
        State dimension d and Wiener dimension m.
    drift
        Callable (t, x) -> array of shape (..., d) for x of shape (..., d).
    diffusion
        Callable (t, x) -> array of shape (..., d, m).
    initial_value
        Either a length-d vector or a callable rng -> length-d vector.
    assumptions
        Declared regularity metadata.
    exact_solution
        Optional callable (t, w) -> (..., d) giving the closed-form solution
        at times t from Brownian values w of shape (..., m); broadcasts over
        leading axes.  None for models without a closed form.
    batch_coefficients
        True if drift/diffusion accept a leading batch axis, i.e. x of shape
        (k, d).  Models that only handle single states are called row by row.
    """

    name: str
    dim_state: int
    dim_noise: int
    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    initial_value: np.ndarray | Callable[[np.random.Generator], np.ndarray]
    assumptions: AssumptionMetadata = field(default_factory=AssumptionMetadata)
    exact_solution: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    batch_coefficients: bool = False

    def __post_init__(self) -> None:
        if self.dim_state < 1 or self.dim_noise < 1:
            raise DomainError(
                f"dimensions must be >= 1, got d={self.dim_state}, m={self.dim_noise}"
            )
        if not callable(self.initial_value):
            x0 = np.asarray(self.initial_value, dtype=np.float64)
            if x0.shape != (self.dim_state,):
                raise DomainError(
                    f"initial_value must have shape ({self.dim_state},), got {x0.shape}"
                )
            if not np.all(np.isfinite(x0)):
                raise NumericError(f"model {self.name!r}: non-finite initial value {x0}")
            x0.setflags(write=False)
            object.__setattr__(self, "initial_value", x0)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k/n on [0, T], with the last point clamped to T.

    ``n`` counts steps per unit time.  When T is not a multiple of 1/n the
    final step is shortened to end exactly at T; the left-endpoint map
    ``kappa`` is still floor(n t)/n.
    """

    horizon: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        if self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        full = self._floor_units(self.horizon)
        pts = np.arange(full + 1, dtype=np.float64) / self.n
        if pts[-1] < self.horizon:
            pts = np.append(pts, self.horizon)
        pts.setflags(write=False)
        object.__setattr__(self, "_points", pts)

    @property
    def points(self) -> np.ndarray:
        """Grid points, shape (num_steps + 1,)."""
        return self._points  # type: ignore[attr-defined]

    @property
    def num_steps(self) -> int:
        return len(self.points) - 1

    @property
    def step_sizes(self) -> np.ndarray:
        return np.diff(self.points)

    def _floor_units(self, t: float) -> int:
        # floor(n t) with a guard against products landing one ulp below an
        # integer (e.g. 10 * 0.3 = 2.9999999999999996).
        k = int(math.floor(self.n * t))
        if (k + 1) / self.n <= t:
            k += 1
        return k

    def kappa(self, t: float) -> float:
        """Largest grid point <= t, i.e. floor(n t)/n.

        Raises DomainError for t outside [0, T].
        """
        if not (0.0 <= t <= self.horizon):
            raise DomainError(f"t={t} outside [0, {self.horizon}]")
        return self._floor_units(t) / self.n

    def index_of(self, t: float) -> int:
        """Index k with points[k] == t exactly; DomainError if t is off-grid."""
        if t == self.horizon:
            return self.num_steps
        if 0.0 <= t < self.horizon:
            k = self._floor_units(t)
            if k / self.n == t:
                return k
        raise DomainError(f"t={t} is not a grid point of TimeGrid(T={self.horizon}, n={self.n})")


def tame_drift(b_value: np.ndarray, n: int, alpha: float = 0.5) -> np.ndarray:
    """Rescale a drift vector to b / (1 + n^{-alpha} |b|).

    Acts along the last axis, so a (k, d) batch of drift vectors is tamed
    row-wise.  The result keeps the direction of b and its Euclidean norm is
    at most min(n^alpha, |b|).

    Raises DomainError for alpha outside (0, 1/2] or n < 1, NumericError for
    non-finite input.
    """
    if not (0.0 < alpha <= 0.5):
        raise DomainError(f"alpha must lie in (0, 1/2], got {alpha}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    b = np.asarray(b_value, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise NumericError(f"cannot tame non-finite drift value {b_value!r}")
    norm = np.linalg.norm(b, axis=-1, keepdims=True)
    return b / (1.0 + float(n) ** (-alpha) * norm)


def _check_state(model: SdeModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim_state,):
        raise DomainError(
            f"model {model.name!r}: state must have shape ({model.dim_state},), got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise NumericError(f"model {model.name!r}: non-finite state {x}")
    return x


def eval_drift(model: SdeModel, t: float, x: np.ndarray) -> np.ndarray:
    """Evaluate b(t, x) for a single state, validating shape and finiteness."""
    x = _check_state(model, x)
    out = np.asarray(model.drift(t, x), dtype=np.float64)
    if out.shape != (model.dim_state,):
        raise DomainError(
            f"model {model.name!r}: drift returned shape {out.shape}, "
            f"expected ({model.dim_state},)"
        )
    if not np.all(np.isfinite(out)):
        raise NumericError(f"model {model.name!r}: drift non-finite at t={t}, x={x}")
    return out


def eval_diffusion(model: SdeModel, t: float, x: np.ndarray) -> np.ndarray:
    """Evaluate sigma(t, x) for a single state, validating shape and finiteness."""
    x = _check_state(model, x)
    out = np.asarray(model.diffusion(t, x), dtype=np.float64)
    if out.shape != (model.dim_state, model.dim_noise):
        raise DomainError(
            f"model {model.name!r}: diffusion returned shape {out.shape}, "
            f"expected ({model.dim_state}, {model.dim_noise})"
        )
    if not np.all(np.isfinite(out)):
        raise NumericError(f"model {model.name!r}: diffusion non-finite at t={t}, x={x}")
    return out


def realize_initial(model: SdeModel, master_seed: int, path_id: int) -> np.ndarray:
    """Realize X(0) for one Monte Carlo path.

    Deterministic initial values are returned as-is; samplers are fed a
    Philox generator keyed on (master_seed XOR salt, path_id) so the draw is
    reproducible and independent of the path's increment stream.
    """
    if not callable(model.initial_value):
        return np.asarray(model.initial_value, dtype=np.float64)
    key = np.array(
        [(int(master_seed) ^ INITIAL_VALUE_KEY_SALT) % 2**64, int(path_id) % 2**64],
        dtype=np.uint64,
    )
    rng = np.random.Generator(np.random.Philox(key=key))
    x0 = np.asarray(model.initial_value(rng), dtype=np.float64)
    if x0.shape != (model.dim_state,):
        raise DomainError(
            f"model {model.name!r}: initial sampler returned shape {x0.shape}, "
            f"expected ({model.dim_state},)"
        )
    if not np.all(np.isfinite(x0)):
        raise NumericError(f"model {model.name!r}: initial sampler produced {x0}")
    return x0
