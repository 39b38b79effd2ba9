"""Monte Carlo excursion estimators and expected-topology predictions.

Estimators compute grid suprema of sampled fields: the one-sided supremum of
v = h / R0 for sign-change probabilities (no absolute value; the event
{sup v > 1/a} is the sign-change event for either sign of a constant-sign R0)
and the two-sided max |deviation| for the sup-norm curvature deviation.
Empirical Euler characteristics of super-level sets on closed triangulations
are joined with the closed-form expected value 2 Psi(u) + L2 rho2(u).

Sampling is chunked at fixed block sizes independent of the worker count, and
chunk results reduce by integer addition, so estimates are byte-identical for
any parallelism.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import gaussian_tail
from .curvature import DeviationMode, deviation_field
from .fields import FieldKind, FieldSample, RandomFieldSpec, make_sampler, variance_summary
from .grids import icosphere
from .spectral import CoefficientScheme, Indexing

__all__ = [
    "P2_CHUNK",
    "EULER_CHUNK",
    "ExcursionReport",
    "P2Study",
    "EulerCurve",
    "P2Prediction",
    "estimate_p2",
    "p2_curve",
    "estimate_linf",
    "empirical_euler",
    "euler_curve",
    "predicted_euler",
    "at_metric_constant",
    "sphere_p2_prediction",
    "attainability_matrix",
    "degeneracy_check",
]

logger = logging.getLogger(__name__)

P2_CHUNK = 2048
EULER_CHUNK = 256

SPHERE2_VOLUME = 4.0 * math.pi


@dataclass(frozen=True)
class ExcursionReport:
    """One Monte Carlo exceedance estimate with its provenance.

    dual_estimate is the same event computed the second way
    (min over the grid of 1 - a v < 0); refinement_delta is the change of the
    estimate under the grid's canonical refinement with identical draws.
    """

    estimate: float
    standard_error: float
    n_samples: int
    threshold: float
    amplitude: float | None
    n_grid_points: int
    seed: int
    first_draw_index: int
    last_draw_index: int
    dual_estimate: float | None = None
    refinement_delta: float | None = None
    regime_warning: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.estimate <= 1.0:
            raise ValueError("estimate must be a probability")


@dataclass(frozen=True)
class P2Study:
    """Shared-sample sign-change estimates over an amplitude grid, plus the
    run-level supremum statistics the concentration bound needs."""

    reports: tuple[ExcursionReport, ...]
    e_sup: float
    sigma_v: float


@dataclass(frozen=True)
class EulerCurve:
    thresholds: np.ndarray
    empirical_mean: np.ndarray
    empirical_se: np.ndarray
    predicted: np.ndarray
    lipschitz_killing: tuple[float, float, float]
    n_samples: int
    seed: int


def _se(count: int, n: int) -> tuple[float, float]:
    p = count / n
    return p, math.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------------------
# chunked Monte Carlo drivers
#
# Worker processes receive (spec, grid, params) through the pool initializer,
# build their sampler once, and then map over chunk indices.  workers = 1 runs
# the identical chunk functions in-process.

_WORK: dict = {}


def _grid_size(grid) -> int:
    n = getattr(grid, "n_points", None)
    if n is not None:
        return int(n)
    if isinstance(grid, tuple) and len(grid) == 2:
        return np.atleast_1d(np.asarray(grid[0], dtype=float)).size
    return len(np.atleast_2d(np.asarray(grid, dtype=float)))


def _refined(grid):
    refine = getattr(grid, "refine", None)
    if refine is None:
        raise ValueError("refinement needs a structured grid with a refine() method")
    return refine()


def _run_chunks(workers: int, init, initargs, task, n_chunks: int) -> list:
    if workers <= 1:
        init(*initargs)
        return [task(i) for i in range(n_chunks)]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=init, initargs=initargs
    ) as ex:
        return list(ex.map(task, range(n_chunks)))


def _p2_init(spec, grid, a_values, refine, seed, n):
    _WORK["sampler"] = make_sampler(spec, grid)
    _WORK["ref_sampler"] = make_sampler(spec, _refined(grid)) if refine else None
    _WORK["r0"] = np.asarray(spec.reference_curvature, dtype=float)
    _WORK["a"] = np.asarray(a_values, dtype=float)
    _WORK["seed"] = int(seed)
    _WORK["n"] = int(n)


def _p2_sups(sampler, j0, j1):
    _, H, _ = sampler.sample_block(_WORK["seed"], range(j0, j1))
    return (H / _WORK["r0"]).max(axis=1)


def _p2_task(chunk_index: int):
    j0 = chunk_index * P2_CHUNK
    j1 = min(j0 + P2_CHUNK, _WORK["n"])
    a = _WORK["a"]
    sups = _p2_sups(_WORK["sampler"], j0, j1)
    counts = (sups[None, :] > (1.0 / a)[:, None]).sum(axis=1)
    # the same event, computed the way the sign-change set is defined:
    # min over the grid of (1 - a v) = 1 - a sup v goes negative
    dual = ((1.0 - a[:, None] * sups[None, :]) < 0.0).sum(axis=1)
    ref_counts = None
    if _WORK["ref_sampler"] is not None:
        rsups = _p2_sups(_WORK["ref_sampler"], j0, j1)
        ref_counts = (rsups[None, :] > (1.0 / a)[:, None]).sum(axis=1)
    return counts.astype(np.int64), dual.astype(np.int64), float(sups.sum()), ref_counts


def p2_curve(
    spec: RandomFieldSpec,
    a_values,
    grid,
    n_samples: int,
    seed: int,
    workers: int = 1,
    refine: bool = False,
) -> P2Study:
    """Sign-change probability estimates at several amplitudes from one shared
    set of samples (the per-sample supremum of v does not depend on a)."""
    if spec.which is not FieldKind.V:
        raise ValueError("sign-change estimation needs a spec for the v = h / R0 field")
    r = np.asarray(spec.reference_curvature, dtype=float)
    if not (np.all(r > 0.0) or np.all(r < 0.0)):
        raise ValueError("reference curvature must have one strict sign on the grid")
    a_arr = np.asarray(a_values, dtype=float)
    if a_arr.size == 0 or np.any(a_arr <= 0.0):
        raise ValueError("amplitudes must be positive and nonempty")
    n = int(n_samples)
    if n < 1:
        raise ValueError("need at least one sample")
    n_chunks = -(-n // P2_CHUNK)
    results = _run_chunks(
        workers, _p2_init, (spec, grid, a_arr, refine, seed, n), _p2_task, n_chunks
    )
    counts = np.zeros(a_arr.size, dtype=np.int64)
    dual = np.zeros(a_arr.size, dtype=np.int64)
    ref_counts = np.zeros(a_arr.size, dtype=np.int64) if refine else None
    sup_parts = []
    for c, d, s, rc in results:
        counts += c
        dual += d
        sup_parts.append(s)
        if refine:
            ref_counts += rc
    reports = []
    for i, a in enumerate(a_arr):
        p, se = _se(int(counts[i]), n)
        reports.append(
            ExcursionReport(
                estimate=p,
                standard_error=se,
                n_samples=n,
                threshold=1.0 / a,
                amplitude=float(a),
                n_grid_points=_grid_size(grid),
                seed=int(seed),
                first_draw_index=0,
                last_draw_index=n - 1,
                dual_estimate=int(dual[i]) / n,
                refinement_delta=None if not refine else int(ref_counts[i]) / n - p,
            )
        )
    return P2Study(
        reports=tuple(reports),
        e_sup=math.fsum(sup_parts) / n,
        sigma_v=math.sqrt(variance_summary(spec, grid).sigma2_sup),
    )


def estimate_p2(
    spec: RandomFieldSpec,
    a: float,
    grid,
    n_samples: int,
    seed: int,
    workers: int = 1,
    refine: bool = False,
) -> ExcursionReport:
    """Fraction of samples whose grid supremum of v = h / R0 exceeds 1/a."""
    return p2_curve(spec, [a], grid, n_samples, seed, workers, refine).reports[0]


_EMPTY = np.zeros(0)


def _linf_init(spec, grid, a, u, mode, refine, seed, n):
    _WORK["sampler"] = make_sampler(spec, grid)
    _WORK["ref_sampler"] = make_sampler(spec, _refined(grid)) if refine else None
    _WORK["reference"] = spec.reference_curvature
    _WORK["dim"] = spec.spectrum.dimension
    _WORK["a"] = float(a)
    _WORK["u"] = float(u)
    _WORK["mode"] = mode
    _WORK["seed"] = int(seed)
    _WORK["n"] = int(n)


def _linf_count(sampler, j0, j1) -> int:
    F, H, _ = sampler.sample_block(_WORK["seed"], range(j0, j1))
    block = FieldSample(
        seed=_WORK["seed"], draw_index=j0, gaussians=_EMPTY, grid=None,
        values_f=F, values_h=H,
    )
    dev = deviation_field(block, _WORK["reference"], _WORK["a"], _WORK["dim"], _WORK["mode"])
    return int((np.abs(dev.exact).max(axis=1) > _WORK["u"]).sum())


def _linf_task(chunk_index: int):
    j0 = chunk_index * P2_CHUNK
    j1 = min(j0 + P2_CHUNK, _WORK["n"])
    c = _linf_count(_WORK["sampler"], j0, j1)
    rc = None
    if _WORK["ref_sampler"] is not None:
        rc = _linf_count(_WORK["ref_sampler"], j0, j1)
    return c, rc


def estimate_linf(
    spec: RandomFieldSpec,
    a: float,
    u: float,
    grid,
    n_samples: int,
    seed: int,
    mode: DeviationMode = DeviationMode.SCALAR_2D,
    workers: int = 1,
    refine: bool = False,
) -> ExcursionReport:
    """Fraction of samples whose max |curvature deviation| over the grid
    exceeds u, using the exact deviation field of the selected mode."""
    if a <= 0 or u <= 0:
        raise ValueError("a and u must be positive")
    if spec.reference_curvature is None:
        raise ValueError("deviation estimation needs the spec's reference curvature")
    n = int(n_samples)
    if n < 1:
        raise ValueError("need at least one sample")
    warning = None
    if u / a < 3.0:
        warning = "u/a < 3: the log-asymptote is not meaningful in this regime"
    n_chunks = -(-n // P2_CHUNK)
    results = _run_chunks(
        workers, _linf_init, (spec, grid, a, u, mode, refine, seed, n), _linf_task, n_chunks
    )
    count = sum(c for c, _ in results)
    p, se = _se(count, n)
    delta = None
    if refine:
        delta = sum(rc for _, rc in results) / n - p
    return ExcursionReport(
        estimate=p,
        standard_error=se,
        n_samples=n,
        threshold=float(u),
        amplitude=float(a),
        n_grid_points=_grid_size(grid),
        seed=int(seed),
        first_draw_index=0,
        last_draw_index=n - 1,
        refinement_delta=delta,
        regime_warning=warning,
    )


# ---------------------------------------------------------------------------
# Euler characteristics of super-level sets


def _chi_block(values: np.ndarray, u: float, e0, e1, f0, f1, f2) -> np.ndarray:
    """Euler characteristics #V - #E + #F of {values >= u} for a block of
    samples (B, n_vertices) on a fixed closed triangulation."""
    mask = values >= u
    nv = mask.sum(axis=1)
    ne = (mask[:, e0] & mask[:, e1]).sum(axis=1)
    nf = (mask[:, f0] & mask[:, f1] & mask[:, f2]).sum(axis=1)
    return nv - ne + nf


def _closed_triangulation(grid):
    """Faces and edges of the grid, after checking every edge lies in exactly
    two faces (closed manifold); raises otherwise."""
    faces = getattr(grid, "faces", None)
    if faces is None:
        raise ValueError("Euler counting needs a triangulated grid with faces")
    fe = np.sort(
        np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0),
        axis=1,
    )
    edges, counts = np.unique(fe, axis=0, return_counts=True)
    if np.any(counts != 2):
        raise ValueError("triangulation is not a closed manifold: an edge is not shared by exactly 2 faces")
    return faces, edges


def empirical_euler(grid, values, u: float) -> int:
    """Euler characteristic of the super-level set {values >= u} on the grid's
    triangulation, counting vertices, edges and faces entirely above u."""
    faces, edges = _closed_triangulation(grid)
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size != _grid_size(grid):
        raise ValueError("values must cover every grid vertex")
    if np.any(vals == u):
        # nudge the threshold off the colliding vertex value
        u = u - 1e-12
        logger.info("threshold collides with a vertex value; perturbed by -1e-12")
    chi = _chi_block(
        vals[None, :], u, edges[:, 0], edges[:, 1], faces[:, 0], faces[:, 1], faces[:, 2]
    )
    return int(chi[0])


def _euler_init(spec, grid, thresholds, seed, n):
    faces, edges = _closed_triangulation(grid)
    _WORK["sampler"] = make_sampler(spec, grid)
    _WORK["e0"], _WORK["e1"] = edges[:, 0], edges[:, 1]
    _WORK["f0"], _WORK["f1"], _WORK["f2"] = faces[:, 0], faces[:, 1], faces[:, 2]
    _WORK["thresholds"] = np.asarray(thresholds, dtype=float)
    _WORK["seed"] = int(seed)
    _WORK["n"] = int(n)


def _euler_task(chunk_index: int):
    j0 = chunk_index * EULER_CHUNK
    j1 = min(j0 + EULER_CHUNK, _WORK["n"])
    _, H, _ = _WORK["sampler"].sample_block(_WORK["seed"], range(j0, j1))
    ts = _WORK["thresholds"]
    chi_sum = np.empty(ts.size, dtype=np.int64)
    chi2_sum = np.empty(ts.size, dtype=np.int64)
    for k, u in enumerate(ts):
        chi = _chi_block(
            H, u, _WORK["e0"], _WORK["e1"], _WORK["f0"], _WORK["f1"], _WORK["f2"]
        )
        chi_sum[k] = chi.sum()
        chi2_sum[k] = (chi * chi).sum()
    return chi_sum, chi2_sum


def euler_curve(
    spec: RandomFieldSpec,
    thresholds,
    n_samples: int,
    seed: int,
    grid=None,
    workers: int = 1,
) -> EulerCurve:
    """Empirical mean Euler characteristic of {h >= u} per threshold, with the
    closed-form prediction 2 Psi(u) + L2 rho2(u) alongside."""
    if grid is None:
        grid = icosphere(5)
    ts = np.asarray(thresholds, dtype=float)
    n = int(n_samples)
    if ts.size == 0 or n < 1:
        raise ValueError("need thresholds and at least one sample")
    n_chunks = -(-n // EULER_CHUNK)
    results = _run_chunks(
        workers, _euler_init, (spec, grid, ts, seed, n), _euler_task, n_chunks
    )
    chi_sum = np.zeros(ts.size, dtype=np.int64)
    chi2_sum = np.zeros(ts.size, dtype=np.int64)
    for cs, c2 in results:
        chi_sum += cs
        chi2_sum += c2
    mean = chi_sum / n
    var = (chi2_sum - n * mean * mean) / (n - 1) if n > 1 else np.zeros(ts.size)
    se = np.sqrt(np.maximum(var, 0.0) / n)
    L2 = SPHERE2_VOLUME * at_metric_constant(spec.coefficients)
    predicted = np.array([predicted_euler(spec.coefficients, u) for u in ts])
    return EulerCurve(
        thresholds=ts,
        empirical_mean=mean,
        empirical_se=se,
        predicted=predicted,
        lipschitz_killing=(2.0, 0.0, L2),
        n_samples=n,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# closed-form predictions and appendix validity checks (sphere schemes)


def _sphere_level_data(scheme: CoefficientScheme) -> tuple[np.ndarray, np.ndarray]:
    """(level h-variance weights, eigenvalues m(m+1)) of a sphere scheme."""
    m = np.arange(1, scheme.truncation + 1, dtype=float)
    eig = m * (m + 1.0)
    if scheme.indexing is Indexing.PER_EIGENSPACE:
        return scheme.values.copy(), eig
    mult = 2.0 * m + 1.0
    return mult * (scheme.values * eig) ** 2 / SPHERE2_VOLUME, eig


def at_metric_constant(scheme: CoefficientScheme) -> float:
    """The constant C with the parameter-space metric of h equal to C times
    the round metric: half the eigenvalue-weighted sum of the level variance
    weights, also the negated second distance-derivative of the h covariance
    at the diagonal."""
    c, eig = _sphere_level_data(scheme)
    return float(np.sum(c * eig) / 2.0)


def predicted_euler(scheme: CoefficientScheme, u: float) -> float:
    """Expected Euler characteristic of {h >= u} for a unit-variance sphere
    scheme: 2 Psi(u) + L2 (2 pi)^{-3/2} u e^{-u^2/2}."""
    if scheme.indexing is not Indexing.PER_EIGENSPACE:
        raise ValueError("the prediction needs the per-eigenspace (variance weight) convention")
    total = float(np.sum(scheme.values))
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"the prediction needs a unit-variance scheme (weights sum to {total:.8f})")
    L2 = SPHERE2_VOLUME * at_metric_constant(scheme)
    rho2 = (2.0 * math.pi) ** -1.5 * u * math.exp(-u * u / 2.0)
    return 2.0 * gaussian_tail(u) + L2 * rho2


@dataclass(frozen=True)
class P2Prediction:
    value: float
    c1: float
    c2: float
    warnings: tuple[str, ...]


def sphere_p2_prediction(scheme: CoefficientScheme, a: float) -> P2Prediction:
    """Asymptotic sign-change probability on the round sphere:
    C1 Psi(1/a) + (C2/a) e^{-1/(2 a^2)} with C1 = 2 and C2 the normalized
    eigenvalue-weighted coefficient sum.  Hypothesis violations are attached
    as warnings, not raised: the number is still evaluable."""
    if a <= 0:
        raise ValueError("amplitude must be positive")
    c, eig = _sphere_level_data(scheme)
    warnings = []
    if scheme.s is not None and scheme.s <= 7.0:
        warnings.append("decay exponent s <= 7: smoothness hypothesis of the asymptotic fails")
    total = float(np.sum(c))
    if abs(total - 1.0) > 1e-6:
        warnings.append(f"scheme is not unit-variance (weights sum to {total:.8f})")
    if not np.any(c[0::2] > 0.0):
        warnings.append("no odd-degree weight is positive: antipodally degenerate covariance")
    c2 = float(np.sum(c * eig)) / math.sqrt(2.0 * math.pi)
    value = 2.0 * gaussian_tail(1.0 / a) + (c2 / a) * math.exp(-1.0 / (2.0 * a * a))
    return P2Prediction(value=value, c1=2.0, c2=c2, warnings=tuple(warnings))


def attainability_matrix(
    scheme: CoefficientScheme, truncation: int | None = None
) -> tuple[np.ndarray, bool]:
    """Second-order covariance matrix of the scheme's h field: the weighted
    sum of the per-level 5x5 blocks blockdiag((E/2) I2, Omega) with
    Omega = (E/8) [[3E-2, E+2, 0], [E+2, 3E-2, 0], [0, 0, E-2]].  Returns the
    matrix and whether it is positive definite (eigenvalue check)."""
    c, eig = _sphere_level_data(scheme)
    M = c.size if truncation is None else int(truncation)
    if not 1 <= M <= c.size:
        raise ValueError("truncation must select at least one listed level")
    C = np.zeros((5, 5))
    for i in range(M):
        E = eig[i]
        C[0, 0] += c[i] * E / 2.0
        C[1, 1] += c[i] * E / 2.0
        om = (E / 8.0) * np.array(
            [[3.0 * E - 2.0, E + 2.0, 0.0], [E + 2.0, 3.0 * E - 2.0, 0.0], [0.0, 0.0, E - 2.0]]
        )
        C[2:, 2:] += c[i] * om
    eigs = np.linalg.eigvalsh(C)
    return C, bool(eigs[0] > 1e-12 * np.trace(C))


def degeneracy_check(scheme: CoefficientScheme) -> bool:
    """True iff some odd-degree level has a strictly positive coefficient,
    the condition ruling out covariance degeneracies such as the antipodal
    identification of even-only schemes."""
    return bool(np.any(np.asarray(scheme.values)[0::2] > 0.0))
