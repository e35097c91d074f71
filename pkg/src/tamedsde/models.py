"""Model zoo: a globally Lipschitz control model with a closed form (GBM),
superlinear cubic-drift models with additive and multiplicative noise, a
3-d cubic system for exercising vector code paths, and a zero fixture.

Coefficients are small frozen callables (picklable, so process pools work)
that broadcast over a leading batch axis.  Declared assumption constants are
chosen so every model passes `spot_check_assumptions`; the derivations are
noted inline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AssumptionMetadata, DomainError, SdeModel

__all__ = [
    "make_gbm",
    "make_cubic",
    "make_cubic_multiplicative",
    "make_cubic_3d",
    "make_zero",
    "MODEL_BUILDERS",
    "build_model",
]


@dataclass(frozen=True)
class _LinearDrift:
    mu: float

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.mu * x


@dataclass(frozen=True)
class _LinearDiffusion:
    xi: float

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        # sigma(x) = xi * diag(x): shape (..., d) -> (..., d, m) with d == m
        out = np.zeros(x.shape + (x.shape[-1],))
        idx = np.arange(x.shape[-1])
        out[..., idx, idx] = self.xi * x
        return out


@dataclass(frozen=True)
class _CubicDrift:
    a: float
    lam: float

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.a * x - self.lam * x**3


@dataclass(frozen=True)
class _ConstantDiffusion:
    matrix: tuple[tuple[float, ...], ...]

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        m = np.asarray(self.matrix, dtype=np.float64)
        return np.broadcast_to(m, x.shape[:-1] + m.shape)


@dataclass(frozen=True)
class _GbmExact:
    mu: float
    xi: float
    x0: float

    def __call__(self, t: np.ndarray, w: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        drift_part = (self.mu - 0.5 * self.xi**2) * t
        return self.x0 * np.exp(drift_part[..., None] + self.xi * w)


def make_gbm(mu: float = 0.05, xi: float = 0.2, x0: float = 1.0) -> SdeModel:
    """Geometric Brownian motion dX = mu X dt + xi X dW, with closed form.

    X(t) = x0 exp((mu - xi^2/2) t + xi W(t)).  Globally Lipschitz, so it
    serves as the control model where taming should change nothing
    asymptotically.
    """
    if x0 <= 0:
        raise DomainError(f"gbm needs x0 > 0, got {x0}")
    # 2 x b = 2 mu x^2 and |sigma|^2 = xi^2 x^2; one-sided constant covers
    # both the drift gap mu (x-y)^2 and the diffusion gap xi^2 (x-y)^2.
    meta = AssumptionMetadata(
        coercivity_constant=2.0 * abs(mu) + xi**2,
        one_sided_constant=max(abs(mu), xi**2),
        poly_degree=0.0,
        coercive=True,
        locally_one_sided=True,
        drift_locally_bounded=True,
        one_sided_poly_lipschitz=True,
    )
    return SdeModel(
        name="gbm",
        dim_state=1,
        dim_noise=1,
        drift=_LinearDrift(mu),
        diffusion=_LinearDiffusion(xi),
        initial_value=np.array([x0]),
        assumptions=meta,
        exact_solution=_GbmExact(mu, xi, x0),
        batch_coefficients=True,
    )


def _cubic_meta(a: float, lam: float, diffusion_sq: float, one_sided_extra: float = 0.0):
    # 2 x b = 2a x^2 - 2 lam x^4 <= 2|a|(1 + |x|^2); diffusion_sq bounds
    # |sigma|_F^2 / (1 + |x|^2).  |b(x)-b(y)| <= (|a| + 1.5 lam (x^2 + y^2))|x-y|
    # via |x^3 - y^3| <= 1.5 (x^2 + y^2)|x - y|, so L >= max(|a|, 1.5 lam)
    # with degree 2; the one-sided part only needs L >= a.
    return AssumptionMetadata(
        coercivity_constant=max(2.0 * abs(a), diffusion_sq),
        one_sided_constant=max(abs(a), 1.5 * lam, one_sided_extra),
        poly_degree=2.0,
        coercive=True,
        locally_one_sided=True,
        drift_locally_bounded=True,
        one_sided_poly_lipschitz=True,
    )


def make_cubic(
    a: float = 1.0, lam: float = 1.0, c: float = 1.0, x0: float = 2.0
) -> SdeModel:
    """Cubic-decay drift with additive noise: dX = (a X - lam X^3) dt + c dW.

    The canonical superlinear test case: explicit Euler blows up on it,
    taming does not.
    """
    if lam <= 0:
        raise DomainError(f"cubic drift needs lam > 0, got {lam}")
    if c < 0:
        raise DomainError(f"cubic-additive needs c >= 0, got {c}")
    return SdeModel(
        name="cubic-additive",
        dim_state=1,
        dim_noise=1,
        drift=_CubicDrift(a, lam),
        diffusion=_ConstantDiffusion(((c,),)),
        initial_value=np.array([x0]),
        assumptions=_cubic_meta(a, lam, diffusion_sq=c**2),
        batch_coefficients=True,
    )


def make_cubic_multiplicative(
    a: float = 1.0, lam: float = 1.0, xi: float = 0.5, x0: float = 2.0
) -> SdeModel:
    """Cubic drift with linear-growth noise: dX = (a X - lam X^3) dt + xi X dW."""
    if lam <= 0:
        raise DomainError(f"cubic drift needs lam > 0, got {lam}")
    return SdeModel(
        name="cubic-multiplicative",
        dim_state=1,
        dim_noise=1,
        drift=_CubicDrift(a, lam),
        diffusion=_LinearDiffusion(xi),
        initial_value=np.array([x0]),
        assumptions=_cubic_meta(a, lam, diffusion_sq=xi**2, one_sided_extra=xi**2),
        batch_coefficients=True,
    )


def make_cubic_3d(
    a: float = 1.0, lam: float = 1.0, c: float = 1.0, x0: float = 2.0
) -> SdeModel:
    """Three uncoupled cubic coordinates with additive noise, d = m = 3.

    Exercises the vector code paths; note the taming still couples the
    coordinates through the full drift norm.
    """
    if lam <= 0:
        raise DomainError(f"cubic drift needs lam > 0, got {lam}")
    if c < 0:
        raise DomainError(f"cubic-3d needs c >= 0, got {c}")
    diag = tuple(tuple(c if i == j else 0.0 for j in range(3)) for i in range(3))
    return SdeModel(
        name="cubic-3d",
        dim_state=3,
        dim_noise=3,
        drift=_CubicDrift(a, lam),
        diffusion=_ConstantDiffusion(diag),
        initial_value=np.full(3, float(x0)),
        assumptions=_cubic_meta(a, lam, diffusion_sq=3.0 * c**2),
        batch_coefficients=True,
    )


def make_zero() -> SdeModel:
    """b = 0, sigma = 0: constant paths; handy fixture."""
    return SdeModel(
        name="zero",
        dim_state=1,
        dim_noise=1,
        drift=_LinearDrift(0.0),
        diffusion=_ConstantDiffusion(((0.0,),)),
        initial_value=np.array([0.0]),
        assumptions=AssumptionMetadata(
            coercivity_constant=0.0,
            one_sided_constant=0.0,
            poly_degree=0.0,
            coercive=True,
            locally_one_sided=True,
            drift_locally_bounded=True,
            one_sided_poly_lipschitz=True,
        ),
        batch_coefficients=True,
    )


MODEL_BUILDERS = {
    "gbm": make_gbm,
    "cubic-additive": make_cubic,
    "cubic-multiplicative": make_cubic_multiplicative,
    "cubic-3d": make_cubic_3d,
    "zero": make_zero,
}


def build_model(name: str, **params) -> SdeModel:
    """Construct a registered model by CLI name, with parameter overrides."""
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        known = ", ".join(sorted(MODEL_BUILDERS))
        raise DomainError(f"unknown model {name!r}; registered models: {known}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for model {name!r}: {exc}") from None
