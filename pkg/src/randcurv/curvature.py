"""Conformal transformation laws: curvature of the perturbed metric.

Two conventions are used.  Surfaces and general dimension use g1 = e^{af} g0,
under which

    R1 = e^{-af} [ R0 - a(n-1) h - a^2 (n-1)(n-2) |grad f|^2 / 4 ]

with h the Laplace-Beltrami image of f (the gradient term vanishes at n = 2).
The fourth-order case uses g1 = e^{2af} g0 in even dimension n, under which
the associated curvature transforms as Q1 = e^{-naf} (Q0 - a h) with
h = -P f.  In both cases the exponential prefactor is positive, so the sign
of the transformed curvature is the sign of the bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fields import FieldKind, FieldSample, RandomFieldSpec, diagonal_variance

__all__ = [
    "Convention",
    "PerturbationParams",
    "CurvatureField",
    "DeviationMode",
    "DeviationField",
    "scalar_curvature_2d",
    "scalar_curvature_nd",
    "q_curvature",
    "q_round_s4",
    "expected_volume",
    "deviation_field",
]


class Convention(str, Enum):
    SCALAR_EXP_AF = "scalar_exp_af"    # g1 = e^{af} g0
    Q_EXP_2AF = "q_exp_2af"            # g1 = e^{2af} g0, even n >= 4


@dataclass(frozen=True)
class PerturbationParams:
    a: float
    n: int
    convention: Convention = Convention.SCALAR_EXP_AF

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("amplitude must be positive")
        if self.convention is Convention.Q_EXP_2AF and (self.n < 4 or self.n % 2):
            raise ValueError("the fourth-order convention needs even n >= 4")


@dataclass
class CurvatureField:
    """Transformed curvature on a grid, with its reference and sign array.

    sign is computed from the bracket (the exponential prefactor is
    positive, so it carries no sign information).
    """

    grid: object
    values: np.ndarray
    reference: float | np.ndarray
    sign: np.ndarray


def _require(sample: FieldSample, attr: str) -> np.ndarray:
    v = getattr(sample, attr)
    if v is None:
        raise ValueError(f"sample is missing {attr}")
    return v


def scalar_curvature_2d(R0, sample: FieldSample, a: float) -> CurvatureField:
    """R1 = e^{-af} (R0 - a h) on a surface."""
    f = _require(sample, "values_f")
    h = _require(sample, "values_h")
    bracket = R0 - a * h
    return CurvatureField(
        grid=sample.grid,
        values=np.exp(-a * f) * bracket,
        reference=R0,
        sign=np.sign(bracket),
    )


def scalar_curvature_nd(R0, sample: FieldSample, a: float, n: int) -> CurvatureField:
    """Full conformal law in dimension n; at n = 2 this is the same
    arithmetic as scalar_curvature_2d (the gradient term carries an exact
    zero factor)."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    f = _require(sample, "values_f")
    h = _require(sample, "values_h")
    if n == 2:
        return scalar_curvature_2d(R0, sample, a)
    g = _require(sample, "values_gradsq")
    bracket = R0 - (a * (n - 1)) * h - (a * a * (n - 1) * (n - 2) / 4.0) * g
    return CurvatureField(
        grid=sample.grid,
        values=np.exp(-a * f) * bracket,
        reference=R0,
        sign=np.sign(bracket),
    )


def q_curvature(Q0, sample: FieldSample, a: float, n: int) -> CurvatureField:
    """Q1 = e^{-naf} (Q0 - a h) with h = -P f, even dimension."""
    if n % 2 or n < 2:
        raise ValueError("the Q transformation law is for even dimensions")
    f = _require(sample, "values_f")
    h = _require(sample, "values_h")
    bracket = Q0 - a * h
    return CurvatureField(
        grid=sample.grid,
        values=np.exp(-(n * a) * f) * bracket,
        reference=Q0,
        sign=np.sign(bracket),
    )


def q_round_s4() -> float:
    """Fourth-order curvature constant of the unit round 4-sphere, derived
    from the dimension-4 formula -(1/12)(Lap R - R^2 + 3 |Ric|^2) with the
    round data R = n(n-1), Ric = (n-1) g, Lap R = 0 at n = 4."""
    n = 4
    scal = n * (n - 1.0)
    ric_sq = (n - 1.0) ** 2 * n
    return -(0.0 - scal * scal + 3.0 * ric_sq) / 12.0


def expected_volume(spec: RandomFieldSpec, a: float, n: int, grid) -> float:
    """Expected volume of the perturbed metric, integrated on the grid:
    the volume element is e^{naf/2} dV0 and averaging the lognormal factor
    pointwise gives the integrand e^{n^2 a^2 r_f(x,x)/8}."""
    f_spec = RandomFieldSpec(spec.spectrum, spec.coefficients, FieldKind.F)
    var_f = diagonal_variance(f_spec, grid)
    weights = getattr(grid, "weights", None)
    if weights is None:
        raise ValueError("expected_volume needs a grid with quadrature weights")
    # fsum: exactly rounded, so a = 0 returns the grid's total area verbatim
    return math.fsum(weights * np.exp((n * n * a * a / 8.0) * var_f))


class DeviationMode(str, Enum):
    SCALAR_2D = "scalar_2d"
    Q = "q"


@dataclass
class DeviationField:
    """Exact curvature deviation and its small-a linearization.

    Scalar surface case: exact = R0 (e^{-af} - 1) - a h e^{-af}, and the
    linearization is -a w with w = h + R0 f.  Fourth-order case: exact uses
    the e^{-naf} prefactor and the linearization is -a (h + n Q0 f), which
    equals +a w for the sign convention w = -(h + n Q0 f).
    """

    grid: object
    exact: np.ndarray
    linear: np.ndarray
    mode: DeviationMode


def deviation_field(
    sample: FieldSample, reference, a: float, n: int, mode: DeviationMode
) -> DeviationField:
    f = _require(sample, "values_f")
    h = _require(sample, "values_h")
    if mode is DeviationMode.SCALAR_2D:
        if n != 2:
            raise ValueError("the surface deviation needs n = 2")
        rate, coef = a, 1.0
    else:
        if n % 2 or n < 2:
            raise ValueError("the fourth-order deviation needs even n")
        rate, coef = n * a, float(n)
    pref = np.exp(-rate * f)
    exact = reference * np.expm1(-rate * f) - a * h * pref
    linear = -a * (h + coef * reference * f)
    return DeviationField(grid=sample.grid, exact=exact, linear=linear, mode=mode)
