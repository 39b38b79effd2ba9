"""Gaussian random fields built from spectral data.

The conformal factor field f has independent centered Gaussian coefficients
against the orthonormal eigenfunctions; h is its image under the reference
operator with the sign convention h = -P f (which on surfaces is the
Laplace-Beltrami image of f, eigenvalue -lambda per level).  Derived fields:
v = h / R0 and the linearization field w (h + R0 f for surfaces, -(h + n Q0 f)
for the fourth-order case; only the sign differs and both are centered).

Per-level coefficient weights come in two indexings (see spectral):
per-eigenfunction scales c (f coefficient std per eigenfunction) and
per-eigenspace variance weights c (the level's contribution to the pointwise
variance of h).  Both reduce to the same per-harmonic (alpha, beta) pair used
throughout this module: alpha is the f coefficient std, beta = -lambda*alpha
the h coefficient std.

Sampling is counter-based: the Gaussian vector of draw j from seed s is
generated by a Philox stream keyed by s with counter j * 2^128, so samples
are reproducible and independent of scheduling or worker count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grids import SphereGrid, TorusGrid, sphere_distance
from .harmonics import SphereHarmonicBasis, legendre, legendre_all
from .spectral import CoefficientScheme, Geometry, Indexing, SpectrumModel

__all__ = [
    "FieldKind",
    "RandomFieldSpec",
    "LevelWeights",
    "level_weights",
    "FieldSample",
    "CovarianceKernel",
    "covariance_h_sphere",
    "covariance_f_sphere",
    "gaussian_draws",
    "gaussian_draw_block",
    "SphereSampler",
    "TorusSampler",
    "UserSampler",
    "make_sampler",
    "sample_sphere",
    "sample_torus",
    "sample_cholesky",
    "VarianceSummary",
    "variance_summary",
    "diagonal_variance",
    "HeatVariance",
    "heat_variance",
    "gradient_variance_sphere",
    "legendre",
]

logger = logging.getLogger(__name__)


class FieldKind(str, Enum):
    F = "f"
    H = "h"
    V = "v"
    W = "w"


@dataclass(frozen=True)
class RandomFieldSpec:
    """A spectrum, a coefficient scheme, and which derived field is meant.

    reference_curvature (a constant or gridded values) is required for the
    V and W fields; V additionally needs it nowhere zero.
    """

    spectrum: SpectrumModel
    coefficients: CoefficientScheme
    which: FieldKind = FieldKind.H
    reference_curvature: float | np.ndarray | None = None

    def __post_init__(self):
        if self.coefficients.truncation > self.spectrum.n_levels:
            raise ValueError("scheme truncation exceeds the spectrum's level count")
        nneg = len(self.spectrum.negative_levels)
        if self.coefficients.neg_values.size not in (0, nneg):
            raise ValueError(
                "negative-level scales must align with the spectrum's negative levels"
            )
        if self.which in (FieldKind.V, FieldKind.W):
            if self.reference_curvature is None:
                raise ValueError(f"field {self.which.value} needs reference_curvature")
            if self.which is FieldKind.V:
                r = np.asarray(self.reference_curvature, dtype=float)
                if np.any(r == 0.0):
                    raise ValueError("v = h / R0 needs a nowhere-zero reference curvature")

    @property
    def q_mode(self) -> bool:
        # fourth-order convention for the linearization field
        return self.spectrum.dimension != 2

    def constant_reference(self) -> float:
        r = np.asarray(self.reference_curvature, dtype=float)
        if r.ndim == 0:
            return float(r)
        if np.ptp(r) == 0.0:
            return float(r.ravel()[0])
        raise ValueError("this operation needs a constant reference curvature")


@dataclass(frozen=True)
class LevelWeights:
    """Per-harmonic coefficient standard deviations by level.

    alpha: f coefficient; beta = -lambda * alpha: h coefficient (signed).
    Negative-spectrum levels carry beta = +mu * alpha.
    """

    alpha: np.ndarray
    beta: np.ndarray
    neg_alpha: np.ndarray
    neg_beta: np.ndarray


def level_weights(spec: RandomFieldSpec) -> LevelWeights:
    sch = spec.coefficients
    model = spec.spectrum
    M = sch.truncation
    lam = model.eigenvalues[:M]
    if sch.indexing is Indexing.PER_EIGENFUNCTION:
        alpha = sch.values.copy()
    else:
        # per-eigenspace: values are the level variance weights of h
        N = model.multiplicities[:M].astype(float)
        alpha = np.sqrt(sch.values * model.volume / N) / lam
    beta = -lam * alpha
    nneg = len(model.negative_levels)
    if nneg and sch.neg_values.size:
        mu = np.array([p[0] for p in model.negative_levels])
        neg_alpha = sch.neg_values.copy()
        neg_beta = mu * neg_alpha
    else:
        neg_alpha = np.zeros(nneg)
        neg_beta = np.zeros(nneg)
    return LevelWeights(alpha, beta, neg_alpha, neg_beta)


def _field_scales(spec: RandomFieldSpec, lw: LevelWeights) -> tuple[np.ndarray, np.ndarray]:
    """Per-harmonic std of the selected field by level (positive, negative).

    V and W need a constant reference here; gridded references are handled
    pointwise by variance_summary instead.
    """
    if spec.which is FieldKind.F:
        return lw.alpha, lw.neg_alpha
    if spec.which is FieldKind.H:
        return lw.beta, lw.neg_beta
    r0 = spec.constant_reference()
    if spec.which is FieldKind.V:
        return lw.beta / r0, lw.neg_beta / r0
    if spec.q_mode:
        n = spec.spectrum.dimension
        return -(lw.beta + n * r0 * lw.alpha), -(lw.neg_beta + n * r0 * lw.neg_alpha)
    return lw.beta + r0 * lw.alpha, lw.neg_beta + r0 * lw.neg_alpha


@dataclass
class FieldSample:
    """One realization: the Gaussian draws plus evaluated fields on a grid.

    Samplers fill values_f / values_h (and optionally values_gradsq); the
    Cholesky path fills values_which for its single target field and records
    the diagonal jitter it had to apply.
    """

    seed: int
    draw_index: int
    gaussians: np.ndarray
    grid: object
    values_f: np.ndarray | None = None
    values_h: np.ndarray | None = None
    values_gradsq: np.ndarray | None = None
    which: FieldKind | None = None
    values_which: np.ndarray | None = None
    jitter: float = 0.0


_U64 = 2**64 - 1


def gaussian_draws(seed: int, draw_index: int, n: int) -> np.ndarray:
    """The canonical i.i.d. N(0,1) vector of a (seed, draw_index) pair.

    Streams are spaced 2^128 Philox states apart (the counter's third word),
    vastly more than one vector ever consumes, so distinct draw indices can
    never overlap.
    """
    if draw_index < 0:
        raise ValueError("draw_index must be >= 0")
    bitgen = np.random.Philox(key=int(seed) & _U64, counter=int(draw_index) << 128)
    return np.random.Generator(bitgen).standard_normal(n)


def gaussian_draw_block(seed: int, draw_indices, n: int) -> np.ndarray:
    """Rows gaussian_draws(seed, j, n) for j in draw_indices, bit-identical.

    Reuses one Philox bit generator by resetting its counter per row instead
    of constructing a generator per draw, which is several times faster for
    the short vectors the samplers consume.
    """
    idx = [int(j) for j in draw_indices]
    bg = np.random.Philox(key=int(seed) & _U64)
    base = bg.state
    key = base["state"]["key"]
    out = np.empty((len(idx), n))
    for r, j in enumerate(idx):
        if j < 0:
            raise ValueError("draw_index must be >= 0")
        st = dict(base)
        st["state"] = {
            "counter": np.array([0, 0, j & _U64, j >> 64], dtype=np.uint64),
            "key": key,
        }
        bg.state = st
        out[r] = np.random.Generator(bg).standard_normal(n)
    return out


# ---------------------------------------------------------------------------
# samplers


class SphereSampler:
    """Evaluates f and h (and optionally |grad f|^2) on a sphere point set."""

    def __init__(self, spec: RandomFieldSpec, grid, want_gradient: bool = False):
        if spec.spectrum.geometry is not Geometry.SPHERE2:
            raise ValueError("sphere sampler needs the Sphere2 geometry")
        theta, phi, self.grid = _sphere_angles_of(grid)
        M = spec.coefficients.truncation
        if M < 1:
            raise ValueError("empty coefficient scheme")
        self.spec = spec
        self.basis = SphereHarmonicBasis(M, theta, phi, want_gradient=want_gradient)
        lw = level_weights(spec)
        counts = spec.spectrum.multiplicities[:M]
        self.wf = np.repeat(lw.alpha, counts)
        self.wh = np.repeat(lw.beta, counts)
        self.want_gradient = want_gradient

    @property
    def n_points(self) -> int:
        return self.basis.theta.size

    @property
    def n_gaussians(self) -> int:
        return self.wf.size

    def sample(self, seed: int, draw_index: int) -> FieldSample:
        a = gaussian_draws(seed, draw_index, self.n_gaussians)
        out = FieldSample(
            seed=seed,
            draw_index=draw_index,
            gaussians=a,
            grid=self.grid,
            values_f=self.basis.Y @ (self.wf * a),
            values_h=self.basis.Y @ (self.wh * a),
        )
        if self.want_gradient:
            cf = self.wf * a
            out.values_gradsq = (self.basis.dtheta @ cf) ** 2 + (
                self.basis.dphi_over_sin @ cf
            ) ** 2
        return out

    def sample_block(self, seed: int, draw_indices) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        """Batched evaluation: returns (F, H, G) arrays of shape (B, n_points)."""
        idx = np.asarray(draw_indices)
        A = gaussian_draw_block(seed, idx, self.n_gaussians)
        F = (A * self.wf) @ self.basis.Y.T
        H = (A * self.wh) @ self.basis.Y.T
        G = None
        if self.want_gradient:
            CF = A * self.wf
            G = (CF @ self.basis.dtheta.T) ** 2 + (CF @ self.basis.dphi_over_sin.T) ** 2
        return F, H, G


class TorusSampler:
    """Evaluates f and h on points of the square torus [0, 2 pi)^2.

    Mode columns are ordered level-major, within a level by the sorted
    half-lattice representatives, cosine before sine; all modes are the
    orthonormal cos(k.x)/(pi sqrt 2), sin(k.x)/(pi sqrt 2).
    """

    def __init__(self, spec: RandomFieldSpec, grid):
        if spec.spectrum.geometry is not Geometry.FLAT_TORUS2:
            raise ValueError("torus sampler needs the FlatTorus2 geometry")
        pts, self.grid = _torus_points_of(grid)
        model = spec.spectrum
        M = spec.coefficients.truncation
        self.spec = spec
        norm = 1.0 / (math.pi * math.sqrt(2.0))
        cols = []
        for i in range(M):
            reps = model.torus_modes[i]
            phase = pts @ reps.T          # (npts, n_reps)
            cos = np.cos(phase) * norm
            sin = np.sin(phase) * norm
            inter = np.empty((pts.shape[0], 2 * reps.shape[0]))
            inter[:, 0::2] = cos
            inter[:, 1::2] = sin
            cols.append(inter)
        self.design = np.concatenate(cols, axis=1)
        lw = level_weights(spec)
        counts = model.multiplicities[:M]
        self.wf = np.repeat(lw.alpha, counts)
        self.wh = np.repeat(lw.beta, counts)

    @property
    def n_points(self) -> int:
        return self.design.shape[0]

    @property
    def n_gaussians(self) -> int:
        return self.wf.size

    def sample(self, seed: int, draw_index: int) -> FieldSample:
        a = gaussian_draws(seed, draw_index, self.n_gaussians)
        return FieldSample(
            seed=seed,
            draw_index=draw_index,
            gaussians=a,
            grid=self.grid,
            values_f=self.design @ (self.wf * a),
            values_h=self.design @ (self.wh * a),
        )

    def sample_block(self, seed: int, draw_indices) -> tuple[np.ndarray, np.ndarray, None]:
        idx = np.asarray(draw_indices)
        A = gaussian_draw_block(seed, idx, self.n_gaussians)
        return (A * self.wf) @ self.design.T, (A * self.wh) @ self.design.T, None


class UserSampler:
    """Evaluates f and h on the stored point set of a user-supplied model."""

    def __init__(self, spec: RandomFieldSpec):
        model = spec.spectrum
        if model.geometry is not Geometry.USER_SUPPLIED:
            raise ValueError("user sampler needs a user-supplied spectrum")
        self.spec = spec
        lw = level_weights(spec)
        M = spec.coefficients.truncation
        counts = model.multiplicities[:M]
        n_pos = int(counts.sum())
        design = [model.eigenfunctions[:n_pos].T]
        wf = [np.repeat(lw.alpha, counts)]
        wh = [np.repeat(lw.beta, counts)]
        if model.negative_levels:
            neg_counts = np.array([p[1] for p in model.negative_levels])
            design.append(model.neg_eigenfunctions.T)
            wf.append(np.repeat(lw.neg_alpha, neg_counts))
            wh.append(np.repeat(lw.neg_beta, neg_counts))
        self.design = np.concatenate(design, axis=1)
        self.wf = np.concatenate(wf)
        self.wh = np.concatenate(wh)
        self.grid = model.points

    @property
    def n_points(self) -> int:
        return self.design.shape[0]

    @property
    def n_gaussians(self) -> int:
        return self.wf.size

    def sample(self, seed: int, draw_index: int) -> FieldSample:
        a = gaussian_draws(seed, draw_index, self.n_gaussians)
        return FieldSample(
            seed=seed,
            draw_index=draw_index,
            gaussians=a,
            grid=self.grid,
            values_f=self.design @ (self.wf * a),
            values_h=self.design @ (self.wh * a),
        )

    def sample_block(self, seed: int, draw_indices):
        idx = np.asarray(draw_indices)
        A = gaussian_draw_block(seed, idx, self.n_gaussians)
        return (A * self.wf) @ self.design.T, (A * self.wh) @ self.design.T, None


def make_sampler(spec: RandomFieldSpec, grid=None, want_gradient: bool = False):
    g = spec.spectrum.geometry
    if g is Geometry.SPHERE2:
        return SphereSampler(spec, grid, want_gradient=want_gradient)
    if g is Geometry.FLAT_TORUS2:
        if want_gradient:
            raise ValueError("gradient evaluation is only provided on the sphere")
        return TorusSampler(spec, grid)
    if g is Geometry.USER_SUPPLIED:
        if want_gradient:
            raise ValueError("gradient evaluation is only provided on the sphere")
        return UserSampler(spec)
    raise ValueError(f"no sampler for geometry {g}")


def sample_sphere(spec, grid, seed, draw_index, want_gradient: bool = False) -> FieldSample:
    return SphereSampler(spec, grid, want_gradient=want_gradient).sample(seed, draw_index)


def sample_torus(spec, grid, seed, draw_index) -> FieldSample:
    return TorusSampler(spec, grid).sample(seed, draw_index)


def _sphere_angles_of(grid):
    if isinstance(grid, SphereGrid):
        return grid.theta, grid.phi, grid
    if isinstance(grid, tuple) and len(grid) == 2:
        th = np.atleast_1d(np.asarray(grid[0], dtype=float))
        ph = np.atleast_1d(np.asarray(grid[1], dtype=float))
        return th, ph, grid
    xyz = np.atleast_2d(np.asarray(grid, dtype=float))
    if xyz.ndim != 2 or xyz.shape[1] != 3:
        raise ValueError("sphere grid must be a SphereGrid, (theta, phi), or (n, 3) points")
    norms = np.linalg.norm(xyz, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("sphere grid points must have unit norm")
    theta = np.arccos(np.clip(xyz[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(xyz[:, 1], xyz[:, 0]), 2.0 * math.pi)
    return theta, phi, grid


def _torus_points_of(grid):
    if isinstance(grid, TorusGrid):
        return grid.points, grid
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("torus grid must be a TorusGrid or (n, 2) points")
    if np.any(pts < -1e-9) or np.any(pts >= 2.0 * math.pi + 1e-9):
        raise ValueError("torus points must lie in [0, 2 pi)^2")
    return pts, grid


# ---------------------------------------------------------------------------
# covariance kernels


@dataclass(frozen=True)
class CovarianceKernel:
    """Closed-form covariance of the spec's selected field.

    form: legendre_series (sphere, function of spherical distance),
    fourier_series (torus, function of the displacement), or gridded_sum
    (user-supplied, matrix over the stored points).
    """

    spec: RandomFieldSpec
    form: str

    def level_variances(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-level pointwise variance contributions (positive, negative)."""
        lw = level_weights(self.spec)
        pos, neg = _field_scales(self.spec, lw)
        model = self.spec.spectrum
        M = self.spec.coefficients.truncation
        if model.geometry is Geometry.USER_SUPPLIED:
            raise ValueError("user-supplied diagonals vary by point; use the matrix form")
        N = model.multiplicities[:M].astype(float)
        pvar = pos * pos * N / model.volume
        if neg.size:
            Nn = np.array([p[1] for p in model.negative_levels], dtype=float)
            nvar = neg * neg * Nn / model.volume
        else:
            nvar = np.zeros(0)
        return pvar, nvar

    def at_distance(self, d):
        """Sphere kernel as a function of spherical distance."""
        if self.form != "legendre_series":
            raise ValueError("distance form only exists on the sphere")
        pvar, _ = self.level_variances()
        M = pvar.size
        d = np.asarray(d, dtype=float)
        table = legendre_all(M, np.cos(d).ravel())
        out = (pvar[:, None] * table[1:]).sum(axis=0)
        return out.reshape(d.shape) if d.shape else float(out[0])

    def at_displacement(self, delta):
        """Torus kernel as a function of the displacement x - y."""
        if self.form != "fourier_series":
            raise ValueError("displacement form only exists on the torus")
        lw = level_weights(self.spec)
        pos, _ = _field_scales(self.spec, lw)
        model = self.spec.spectrum
        delta = np.atleast_2d(np.asarray(delta, dtype=float))
        out = np.zeros(delta.shape[0])
        for i in range(self.spec.coefficients.truncation):
            reps = model.torus_modes[i]
            out += pos[i] ** 2 / (2.0 * math.pi**2) * np.cos(delta @ reps.T).sum(axis=1)
        return out if out.size > 1 else float(out[0])

    def matrix(self, points) -> np.ndarray:
        """Covariance matrix of the field over the given points."""
        model = self.spec.spectrum
        if self.form == "legendre_series":
            theta, phi, _ = _sphere_angles_of(points)
            st, ct = np.sin(theta), np.cos(theta)
            cosd = st[:, None] * st[None, :] * np.cos(phi[:, None] - phi[None, :]) + np.outer(ct, ct)
            return self.at_distance(np.arccos(np.clip(cosd, -1.0, 1.0)))
        if self.form == "fourier_series":
            pts, _ = _torus_points_of(points)
            n = pts.shape[0]
            delta = (pts[:, None, :] - pts[None, :, :]).reshape(n * n, 2)
            return np.asarray(self.at_displacement(delta)).reshape(n, n)
        # gridded_sum: points are indices into the stored point set
        idx = np.asarray(points, dtype=int)
        lw = level_weights(self.spec)
        pos, neg = _field_scales(self.spec, lw)
        counts = model.multiplicities[: self.spec.coefficients.truncation]
        w = np.repeat(pos, counts)
        Phi = model.eigenfunctions[: w.size][:, idx]
        K = (Phi * (w * w)[:, None]).T @ Phi
        if model.negative_levels and neg.size:
            neg_counts = np.array([p[1] for p in model.negative_levels])
            wn = np.repeat(neg, neg_counts)
            Phin = model.neg_eigenfunctions[:, idx]
            K = K + (Phin * (wn * wn)[:, None]).T @ Phin
        return K


def _sphere_kernel(spec: RandomFieldSpec, want: FieldKind) -> CovarianceKernel:
    if spec.spectrum.geometry is not Geometry.SPHERE2:
        raise ValueError("this kernel is defined on the 2-sphere only")
    if spec.which is not want:
        raise ValueError(f"spec selects field {spec.which.value!r}, expected {want.value!r}")
    return CovarianceKernel(spec, "legendre_series")


def covariance_h_sphere(spec: RandomFieldSpec, d):
    """r_h at spherical distance d: the Legendre series with the level
    variance weights of h (equal to the scheme values in the per-eigenspace
    convention)."""
    return _sphere_kernel(spec, FieldKind.H).at_distance(d)


def covariance_f_sphere(spec: RandomFieldSpec, d):
    """r_f at spherical distance d (per-eigenspace weights c_m / lambda_m^2)."""
    return _sphere_kernel(spec, FieldKind.F).at_distance(d)


def kernel_for(spec: RandomFieldSpec) -> CovarianceKernel:
    g = spec.spectrum.geometry
    if g is Geometry.SPHERE2:
        return CovarianceKernel(spec, "legendre_series")
    if g is Geometry.FLAT_TORUS2:
        return CovarianceKernel(spec, "fourier_series")
    if g is Geometry.USER_SUPPLIED:
        return CovarianceKernel(spec, "gridded_sum")
    raise ValueError(f"no covariance kernel for geometry {g}")


# ---------------------------------------------------------------------------
# exact sampling on arbitrary point sets


_JITTER_SCALE = 1e-12
_MAX_JITTER_APPLICATIONS = 3


def sample_cholesky(spec: RandomFieldSpec, points, seed: int, draw_index: int) -> FieldSample:
    """Exact Gaussian sample of the selected field on a finite point set.

    For user-supplied geometries, points are indices into the stored grid.
    A diagonal jitter of 1e-12 * trace/N is added at most 3 times (logged);
    if the matrix still fails to factor, the error reports the most negative
    eigenvalue.
    """
    K = kernel_for(spec).matrix(points)
    n = K.shape[0]
    base = _JITTER_SCALE * np.trace(K) / n
    total_jitter = 0.0
    L = None
    for attempt in range(_MAX_JITTER_APPLICATIONS + 1):
        try:
            L = np.linalg.cholesky(K + total_jitter * np.eye(n))
            break
        except np.linalg.LinAlgError:
            if attempt == _MAX_JITTER_APPLICATIONS:
                lo = float(np.linalg.eigvalsh(K)[0])
                raise np.linalg.LinAlgError(
                    f"covariance matrix is indefinite beyond jitter tolerance; "
                    f"most negative eigenvalue ~ {lo:.6e}"
                )
            total_jitter += base
            logger.info(
                "cholesky jitter applied: %d x %.3e on %d points", attempt + 1, base, n
            )
    z = gaussian_draws(seed, draw_index, n)
    values = L @ z
    out = FieldSample(
        seed=seed,
        draw_index=draw_index,
        gaussians=z,
        grid=points,
        which=spec.which,
        values_which=values,
        jitter=total_jitter,
    )
    if spec.which is FieldKind.F:
        out.values_f = values
    elif spec.which is FieldKind.H:
        out.values_h = values
    return out


# ---------------------------------------------------------------------------
# variance summaries


@dataclass(frozen=True)
class VarianceSummary:
    sigma2_sup: float
    argmax_index: int
    argmax_point: np.ndarray | None
    is_constant: bool
    sigma2_min: float


def _grid_points(grid):
    if isinstance(grid, SphereGrid):
        return grid.xyz
    if isinstance(grid, TorusGrid):
        return grid.points
    if grid is None:
        return None
    return np.asarray(grid)


def diagonal_variance(spec: RandomFieldSpec, grid) -> np.ndarray:
    """Pointwise variance of the selected field at the grid points."""
    return _diagonal_components(spec, grid)[0]


def variance_summary(spec: RandomFieldSpec, grid) -> VarianceSummary:
    """Pointwise variance of the selected field over the grid, its sup and
    argmax, and a constancy flag (max - min < 1e-10 * max)."""
    diag, pts = _diagonal_components(spec, grid)
    npts = diag.size
    imax = int(np.argmax(diag))
    hi = float(diag[imax])
    lo = float(diag.min())
    return VarianceSummary(
        sigma2_sup=hi,
        argmax_index=imax,
        argmax_point=(None if pts is None else np.asarray(pts[imax])),
        is_constant=bool(hi - lo < 1e-10 * max(hi, 1e-300)),
        sigma2_min=lo,
    )


def _diagonal_components(spec: RandomFieldSpec, grid):
    model = spec.spectrum
    lw = level_weights(spec)
    if model.geometry is Geometry.USER_SUPPLIED:
        counts = model.multiplicities[: spec.coefficients.truncation]
        wf = np.repeat(lw.alpha, counts)
        wh = np.repeat(lw.beta, counts)
        Phi = model.eigenfunctions[: wf.size]
        var_f = (wf[:, None] ** 2 * Phi**2).sum(axis=0)
        var_h = (wh[:, None] ** 2 * Phi**2).sum(axis=0)
        cov_fh = ((wf * wh)[:, None] * Phi**2).sum(axis=0)
        if model.negative_levels:
            neg_counts = np.array([p[1] for p in model.negative_levels])
            wfn = np.repeat(lw.neg_alpha, neg_counts)
            whn = np.repeat(lw.neg_beta, neg_counts)
            Phin = model.neg_eigenfunctions
            var_f = var_f + (wfn[:, None] ** 2 * Phin**2).sum(axis=0)
            var_h = var_h + (whn[:, None] ** 2 * Phin**2).sum(axis=0)
            cov_fh = cov_fh + ((wfn * whn)[:, None] * Phin**2).sum(axis=0)
        npts = var_h.size
    else:
        # isotropic: constants across the grid
        M = spec.coefficients.truncation
        N = model.multiplicities[:M].astype(float)
        var_f = float(np.sum(lw.alpha**2 * N) / model.volume)
        var_h = float(np.sum(lw.beta**2 * N) / model.volume)
        cov_fh = float(np.sum(lw.alpha * lw.beta * N) / model.volume)
        pts = _grid_points(grid)
        if pts is None:
            raise ValueError("variance_summary needs a grid")
        npts = len(pts)
        var_f = np.full(npts, var_f)
        var_h = np.full(npts, var_h)
        cov_fh = np.full(npts, cov_fh)
    if npts == 0:
        raise ValueError("variance_summary needs a nonempty grid")

    if spec.which is FieldKind.F:
        diag = var_f
    elif spec.which is FieldKind.H:
        diag = var_h
    else:
        r0 = np.broadcast_to(
            np.asarray(spec.reference_curvature, dtype=float), (npts,)
        )
        if spec.which is FieldKind.V:
            diag = var_h / r0**2
        else:
            scale = spec.spectrum.dimension if spec.q_mode else 1.0
            # w = h + R0 f (surfaces) or -(h + n Q0 f); variance is the same
            diag = var_h + 2.0 * (scale * r0) * cov_fh + (scale * r0) ** 2 * var_f

    pts = _grid_points(grid)
    if pts is None and model.geometry is Geometry.USER_SUPPLIED:
        pts = model.points
    return diag, pts


# ---------------------------------------------------------------------------
# heat-kernel variance and gradient variance


@dataclass(frozen=True)
class HeatVariance:
    """Diagonal of the heat kernel without its constant term.

    For the built-in homogeneous geometries this is a constant (is_constant
    true, values None); user-supplied models get pointwise values over their
    stored grid.
    """

    sup: float
    is_constant: bool
    values: np.ndarray | None = None


def heat_variance(spectrum: SpectrumModel, T: float) -> HeatVariance:
    """sum_j e^{-lambda_j T} phi_j(x)^2, extended adaptively past any
    truncation for the built-in geometries."""
    if T <= 0:
        raise ValueError("diffusion time must be positive")
    g = spectrum.geometry
    if g is Geometry.SPHERE2:
        total = 0.0
        m = 1
        while True:
            term = (2 * m + 1) * math.exp(-m * (m + 1) * T)
            total += term
            if term < 1e-17 * max(total, 1e-300) or m > 100000:
                break
            m += 1
        return HeatVariance(sup=total / spectrum.volume, is_constant=True)
    if g is Geometry.FLAT_TORUS2:
        r = 1
        total = 0.0
        while True:
            k = np.arange(-r, r + 1)
            K1, K2 = np.meshgrid(k, k, indexing="ij")
            n2 = (K1**2 + K2**2).astype(float)
            sel = n2 > 0
            new_total = float(np.sum(np.exp(-n2[sel] * T)))
            if r > 4 and new_total - total < 1e-17 * max(new_total, 1e-300):
                total = new_total
                break
            total = new_total
            r *= 2
        return HeatVariance(sup=total / spectrum.volume, is_constant=True)
    if g is Geometry.ROUND_SPHERE4_PANEITZ:
        from .spectral import paneitz_level_s4

        total = 0.0
        m = 1
        while True:
            lam, mult = paneitz_level_s4(m)
            term = mult * math.exp(-lam * T)
            total += term
            if term < 1e-17 * max(total, 1e-300) or m > 10000:
                break
            m += 1
        return HeatVariance(sup=total / spectrum.volume, is_constant=True)
    # user-supplied: finite listed sum on the stored grid
    rows = []
    pos = 0
    for lam, mult in zip(spectrum.eigenvalues, spectrum.multiplicities):
        block = spectrum.eigenfunctions[pos : pos + int(mult)]
        rows.append(math.exp(-lam * T) * np.sum(block**2, axis=0))
        pos += int(mult)
    vals = np.sum(rows, axis=0)
    hi = float(vals.max())
    lo = float(vals.min())
    return HeatVariance(
        sup=hi, is_constant=bool(hi - lo < 1e-10 * max(hi, 1e-300)), values=vals
    )


def gradient_variance_sphere(spec: RandomFieldSpec) -> float:
    """E|grad f|^2 on the round sphere: sum of alpha_m^2 lambda_m N_m / |S^2|
    by the differentiated addition theorem (constant over the sphere).  In the
    per-eigenspace convention this equals sum c_m / lambda_m."""
    model = spec.spectrum
    if model.geometry is not Geometry.SPHERE2:
        raise ValueError(
            "closed-form gradient variance is sphere-only; estimate by MC elsewhere"
        )
    lw = level_weights(spec)
    M = spec.coefficients.truncation
    lam = model.eigenvalues[:M]
    N = model.multiplicities[:M].astype(float)
    return float(np.sum(lw.alpha**2 * lam * N) / model.volume)
