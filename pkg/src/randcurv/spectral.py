"""Reference spectra and Gaussian coefficient schemes.

A SpectrumModel lists the positive Laplacian levels of a reference geometry
(round 2-sphere, square flat 2-torus on [0, 2pi]^2, the fourth-order
conformally covariant operator on the round 4-sphere) or carries user-supplied
eigendata on a finite point set.  A CoefficientScheme attaches Gaussian scales
to that spectrum, either one scale per eigenfunction (c_j = F(lambda_j)) or
one variance weight per eigenspace (the unit-variance sphere convention where
the weights of the Laplacian image field sum to one).

Truncation is explicit: every scheme records the estimated mass fraction of
the dropped tail of the level-variance series, and constructors refuse
configurations whose tail exceeds the tolerance instead of truncating
silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "Geometry",
    "Indexing",
    "SpectrumModel",
    "CoefficientScheme",
    "SPHERE2_VOLUME",
    "TORUS2_VOLUME",
    "SPHERE4_VOLUME",
    "sphere_level",
    "paneitz_level_s4",
    "sphere2_spectrum",
    "torus2_spectrum",
    "s4_paneitz_spectrum",
    "make_power_law",
    "make_sphere_normalized",
    "make_heat_kernel",
    "make_explicit",
    "classify_regularity",
    "zeta_direct",
    "load_spectrum_file",
    "write_spectrum_file",
]

SPHERE2_VOLUME = 4.0 * math.pi
TORUS2_VOLUME = 4.0 * math.pi**2
SPHERE4_VOLUME = 8.0 * math.pi**2 / 3.0

DEFAULT_TAIL_TOL = 1e-8

# level records for the eigenvalue-equality grouping of user files
_LEVEL_MATCH_RTOL = 1e-9


class Geometry(str, Enum):
    SPHERE2 = "sphere2"
    FLAT_TORUS2 = "flat_torus2"
    ROUND_SPHERE4_PANEITZ = "round_sphere4_paneitz"
    USER_SUPPLIED = "user_supplied"


class Indexing(str, Enum):
    PER_EIGENFUNCTION = "per_eigenfunction"
    PER_EIGENSPACE = "per_eigenspace"


def sphere_level(m: int) -> tuple[int, int]:
    """Eigenvalue and multiplicity of degree-m spherical harmonics on S^2.

    Degree 0 (the constants) is excluded throughout the package.
    """
    if m < 1:
        raise ValueError("level index must be >= 1 (constants are excluded)")
    return m * (m + 1), 2 * m + 1


def paneitz_level_s4(m: int) -> tuple[int, int]:
    """Eigenvalue and multiplicity at harmonic degree m of the fourth-order
    conformally covariant operator on the round S^4.

    On degree-m harmonics the operator acts as L(L + 2) where L = m(m + 3) is
    the Laplacian eigenvalue, and L(L + 2) factors as m(m+1)(m+2)(m+3).  The
    multiplicity is the dimension of the degree-m harmonics on S^4.
    """
    if m < 1:
        raise ValueError("level index must be >= 1 (constants are excluded)")
    eig = m * (m + 1) * (m + 2) * (m + 3)
    mult = (m + 1) * (m + 2) * (2 * m + 3) // 6
    return eig, mult


@dataclass(frozen=True)
class SpectrumModel:
    """Positive spectrum of a reference operator, listed level by level.

    eigenvalues[i] is the i-th distinct positive eigenvalue (increasing) and
    multiplicities[i] its eigenspace dimension.  negative_levels holds
    (mu, multiplicity) pairs for operators with negative spectrum; mu > 0 is
    the absolute value of the eigenvalue.

    For isotropic geometries phi_sq_level(i) = N_i / volume is the constant
    value of the sum of squared orthonormal eigenfunctions over level i.
    User-supplied models instead carry the gridded eigenfunction values.
    """

    geometry: Geometry
    dimension: int
    volume: float
    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    negative_levels: tuple[tuple[float, int], ...] = ()
    # torus only: half-lattice representatives per level, each (n_pairs, 2)
    torus_modes: tuple[np.ndarray, ...] | None = None
    # user-supplied only
    points: np.ndarray | None = None
    eigenfunctions: np.ndarray | None = None        # (n_pos_fn, n_points), level-ordered
    neg_eigenfunctions: np.ndarray | None = None    # (n_neg_fn, n_points)

    def __post_init__(self):
        eig = np.asarray(self.eigenvalues, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=int)
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "multiplicities", mult)
        if eig.size == 0:
            raise ValueError("spectrum must contain at least one positive level")
        if eig[0] <= 0.0:
            raise ValueError("first listed eigenvalue must be strictly positive")
        if np.any(np.diff(eig) <= 0.0):
            raise ValueError("eigenvalues must be strictly increasing per level")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be positive")
        for mu, nmu in self.negative_levels:
            if mu <= 0 or nmu < 1:
                raise ValueError("negative levels must be (mu > 0, multiplicity >= 1)")

    @property
    def n_levels(self) -> int:
        return int(self.eigenvalues.size)

    def phi_sq_level(self, i: int) -> float:
        """Pointwise value of sum_k phi_{i,k}^2 over level i (isotropic case)."""
        if self.geometry is Geometry.USER_SUPPLIED:
            raise ValueError("use gridded eigenfunction values for user-supplied spectra")
        return float(self.multiplicities[i]) / self.volume


def sphere2_spectrum(max_level: int) -> SpectrumModel:
    """Laplacian spectrum of the unit round 2-sphere up to harmonic degree max_level."""
    if max_level < 1:
        raise ValueError("need at least one level")
    m = np.arange(1, max_level + 1)
    return SpectrumModel(
        geometry=Geometry.SPHERE2,
        dimension=2,
        volume=SPHERE2_VOLUME,
        eigenvalues=(m * (m + 1)).astype(float),
        multiplicities=2 * m + 1,
    )


def _torus_levels(max_level: int) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    # enumerate nonzero lattice points until max_level distinct squared norms exist
    bound = max(4, 3 * max_level)
    while True:
        r = int(math.isqrt(bound)) + 1
        k1, k2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
        norms = k1**2 + k2**2
        keep = (norms > 0) & (norms <= bound)
        distinct = np.unique(norms[keep])
        if distinct.size >= max_level:
            break
        bound *= 2
    distinct = distinct[:max_level]
    eigs = distinct.astype(float)
    mults = np.empty(max_level, dtype=int)
    modes = []
    half = (k1 > 0) | ((k1 == 0) & (k2 > 0))
    for i, e in enumerate(distinct):
        sel = keep & half & (norms == e)
        reps = np.stack([k1[sel], k2[sel]], axis=1)
        reps = reps[np.lexsort((reps[:, 1], reps[:, 0]))]
        modes.append(reps)
        mults[i] = 2 * reps.shape[0]
    return eigs, mults, modes


def torus2_spectrum(max_level: int) -> SpectrumModel:
    """Laplacian spectrum of the square flat torus [0, 2pi]^2.

    Levels are the distinct squared norms |k|^2 of nonzero integer lattice
    vectors; each level stores one representative per {k, -k} pair (cos and
    sin modes), so the multiplicity is twice the representative count.
    """
    if max_level < 1:
        raise ValueError("need at least one level")
    eigs, mults, modes = _torus_levels(max_level)
    return SpectrumModel(
        geometry=Geometry.FLAT_TORUS2,
        dimension=2,
        volume=TORUS2_VOLUME,
        eigenvalues=eigs,
        multiplicities=mults,
        torus_modes=tuple(modes),
    )


def s4_paneitz_spectrum(max_level: int) -> SpectrumModel:
    """Spectrum of the fourth-order conformally covariant operator on round S^4."""
    if max_level < 1:
        raise ValueError("need at least one level")
    pairs = [paneitz_level_s4(m) for m in range(1, max_level + 1)]
    return SpectrumModel(
        geometry=Geometry.ROUND_SPHERE4_PANEITZ,
        dimension=4,
        volume=SPHERE4_VOLUME,
        eigenvalues=np.array([p[0] for p in pairs], dtype=float),
        multiplicities=np.array([p[1] for p in pairs], dtype=int),
    )


# ---------------------------------------------------------------------------
# coefficient schemes


@dataclass(frozen=True)
class CoefficientScheme:
    """Gaussian scales attached to a spectrum, truncated at level M.

    values[i] is the scale for level i+1.  With per-eigenfunction indexing it
    is the standard deviation of each eigenfunction coefficient of the
    conformal factor field; with per-eigenspace indexing it is the variance
    weight of the level in the Laplacian image field (the weights of a
    normalized scheme sum to 1).  neg_values are the per-eigenfunction scales
    t_i of negative-spectrum levels (explicit only; no generating rule).
    """

    rule: str               # power_law | heat_kernel | sphere_normalized_power_law | explicit
    indexing: Indexing
    values: np.ndarray
    truncation: int
    tail_fraction: float
    s: float | None = None
    T: float | None = None
    normalization: float | None = None   # K for the normalized scheme
    truncated_sum: float | None = None   # sum of values for the normalized scheme
    neg_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "neg_values", np.asarray(self.neg_values, dtype=float))
        if self.values.size != self.truncation:
            raise ValueError("values length must equal the truncation level count")
        if np.any(self.values < 0.0) or np.any(self.neg_values < 0.0):
            raise ValueError("coefficient scales must be nonnegative")


def _h_level_mass(eig: float, mult: float, c: float, indexing: Indexing) -> float:
    # level contribution to the diagonal variance of the Laplacian image field,
    # modulo the constant 1/volume factor shared by all levels
    if indexing is Indexing.PER_EIGENSPACE:
        return c
    return mult * (c * eig) ** 2


def _check_tail(tail_fraction: float, tail_tol: float | None, what: str) -> None:
    if tail_tol is not None and not (tail_fraction <= tail_tol):
        raise ValueError(
            f"truncated {what} drops a tail fraction {tail_fraction:.3e} of the "
            f"level-variance series, above the tolerance {tail_tol:.1e}; raise the "
            "truncation or pass tail_tol=None to accept the recorded estimate"
        )


def _power_tail_sphere2(s: float, M: int) -> float:
    """Tail of sum_m (2m+1) [m(m+1)]^(2-2s) beyond level M (per-eigenfunction mass)."""
    if s <= 1.5:
        return math.inf
    # exact partial window, then the closed-form integral of the same summand
    ms = np.arange(M + 1, M + 2001, dtype=float)
    head = float(np.sum((2 * ms + 1) * (ms * (ms + 1)) ** (2.0 - 2.0 * s)))
    X = M + 2000.0
    rest = (X * (X + 1.0)) ** (3.0 - 2.0 * s) / (2.0 * s - 3.0)
    return head + rest


def _zeta_tail(s: float, M: int) -> float:
    """Tail of sum m^-s beyond M by integral comparison (upper estimate)."""
    return M ** (1.0 - s) / (s - 1.0)


def _heat_tail_sphere2(T: float, M: int) -> float:
    """Tail of sum (2m+1) e^{-m(m+1) T} beyond level M (exact integral bound)."""
    return math.exp(-M * (M + 1) * T) / T


def _power_tail_torus(s: float, e_max: float) -> float:
    """Tail of sum over lattice k of |k|^(4-4s) for |k|^2 > e_max."""
    if s <= 1.5:
        return math.inf
    r2max = 9.0 * e_max
    r = int(math.sqrt(r2max)) + 1
    k1, k2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    n2 = (k1**2 + k2**2).astype(float)
    sel = (n2 > e_max) & (n2 <= r2max)
    head = float(np.sum(n2[sel] ** (2.0 - 2.0 * s)))
    rest = 2.0 * math.pi * r2max ** (3.0 - 2.0 * s) / (4.0 * s - 6.0)
    return head + rest


def _heat_tail_torus(T: float, e_max: float) -> float:
    r2max = e_max + max(40.0 / T, 4.0 * e_max)
    r = int(math.sqrt(r2max)) + 1
    k1, k2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    n2 = (k1**2 + k2**2).astype(float)
    sel = (n2 > e_max) & (n2 <= r2max)
    head = float(np.sum(np.exp(-n2[sel] * T)))
    rest = math.pi * math.exp(-r2max * T) / T
    return head + rest


def _power_tail_s4(s: float, M: int) -> float:
    if s <= 1.5:
        return math.inf
    total = 0.0
    prev = math.inf
    for m in range(M + 1, M + 4001):
        eig, mult = paneitz_level_s4(m)
        t = mult * eig ** (2.0 - 2.0 * s)
        total += t
        prev = t
    # geometric-style remainder from the observed decay of consecutive terms
    eig1, mult1 = paneitz_level_s4(M + 4000)
    eig2, mult2 = paneitz_level_s4(M + 4001)
    t2 = mult2 * eig2 ** (2.0 - 2.0 * s)
    ratio = t2 / prev if prev > 0 else 0.0
    if ratio >= 1.0:
        return math.inf
    return total + t2 / (1.0 - ratio)


def _tail_fraction_power(s: float, spectrum: SpectrumModel, M: int) -> float:
    eig = spectrum.eigenvalues[:M]
    mult = spectrum.multiplicities[:M].astype(float)
    head = float(np.sum(mult * eig ** (2.0 - 2.0 * s)))
    if spectrum.geometry is Geometry.SPHERE2:
        tail = _power_tail_sphere2(s, M)
    elif spectrum.geometry is Geometry.FLAT_TORUS2:
        tail = _power_tail_torus(s, float(eig[-1]))
    elif spectrum.geometry is Geometry.ROUND_SPHERE4_PANEITZ:
        tail = _power_tail_s4(s, M)
    else:
        tail = 0.0
    if math.isinf(tail):
        return 1.0
    return tail / (head + tail)


def make_power_law(
    s: float,
    spectrum: SpectrumModel,
    truncation: int,
    tail_tol: float | None = DEFAULT_TAIL_TOL,
) -> CoefficientScheme:
    """Per-eigenfunction scales c_j = lambda_j^(-s), truncated at level M."""
    if s <= 0:
        raise ValueError("power-law exponent must be positive")
    M = int(truncation)
    if M < 1 or M > spectrum.n_levels:
        raise ValueError("truncation must lie within the spectrum's level range")
    values = spectrum.eigenvalues[:M] ** (-s)
    tail = _tail_fraction_power(s, spectrum, M)
    _check_tail(tail, tail_tol, "power-law scheme")
    return CoefficientScheme(
        rule="power_law",
        indexing=Indexing.PER_EIGENFUNCTION,
        values=values,
        truncation=M,
        tail_fraction=tail,
        s=s,
    )


def make_sphere_normalized(
    s: float,
    truncation: int,
    tail_tol: float | None = DEFAULT_TAIL_TOL,
) -> CoefficientScheme:
    """Per-eigenspace weights c_m = K / m^s on the 2-sphere with K = 1/zeta(s),
    so the untruncated weights sum to one and the Laplacian image field has
    unit variance."""
    if s <= 1:
        raise ValueError("normalized scheme needs s > 1 for a convergent series")
    M = int(truncation)
    if M < 1:
        raise ValueError("need at least one level")
    K = 1.0 / zeta_direct(s)
    m = np.arange(1, M + 1, dtype=float)
    values = K * m ** (-s)
    tail = K * _zeta_tail(s, M)    # fraction of the unit total
    _check_tail(tail, tail_tol, "normalized sphere scheme")
    return CoefficientScheme(
        rule="sphere_normalized_power_law",
        indexing=Indexing.PER_EIGENSPACE,
        values=values,
        truncation=M,
        tail_fraction=tail,
        s=s,
        normalization=K,
        truncated_sum=float(np.sum(values)),
    )


def make_heat_kernel(
    T: float,
    spectrum: SpectrumModel,
    truncation: int,
    tail_tol: float | None = DEFAULT_TAIL_TOL,
) -> CoefficientScheme:
    """Per-eigenfunction scales c_j = e^{-lambda_j T/2} / lambda_j.

    The diagonal variance of the Laplacian image field is then the heat trace
    density without its constant term, sum_j e^{-lambda_j T} phi_j(x)^2.
    """
    if T <= 0:
        raise ValueError("diffusion time must be positive")
    M = int(truncation)
    if M < 1 or M > spectrum.n_levels:
        raise ValueError("truncation must lie within the spectrum's level range")
    eig = spectrum.eigenvalues[:M]
    values = np.exp(-eig * (T / 2.0)) / eig
    mult = spectrum.multiplicities[:M].astype(float)
    head = float(np.sum(mult * np.exp(-eig * T)))
    if spectrum.geometry is Geometry.SPHERE2:
        tail = _heat_tail_sphere2(T, M)
    elif spectrum.geometry is Geometry.FLAT_TORUS2:
        tail = _heat_tail_torus(T, float(eig[-1]))
    elif spectrum.geometry is Geometry.ROUND_SPHERE4_PANEITZ:
        lam_next = paneitz_level_s4(M + 1)[0]
        # one-dimensional integral bound after the substitution y = eigenvalue
        tail = math.exp(-lam_next * T) * (2.0 / T)
    else:
        tail = 0.0
    frac = tail / (head + tail)
    _check_tail(frac, tail_tol, "heat-kernel scheme")
    return CoefficientScheme(
        rule="heat_kernel",
        indexing=Indexing.PER_EIGENFUNCTION,
        values=values,
        truncation=M,
        tail_fraction=frac,
        T=T,
    )


def make_explicit(
    values,
    indexing: Indexing = Indexing.PER_EIGENSPACE,
    neg_values=(),
) -> CoefficientScheme:
    """Explicitly listed scales; the truncation is the listed length and the
    tail is zero by construction (nothing beyond the list is intended)."""
    vals = np.asarray(values, dtype=float)
    return CoefficientScheme(
        rule="explicit",
        indexing=indexing,
        values=vals,
        truncation=int(vals.size),
        tail_fraction=0.0,
        neg_values=np.asarray(neg_values, dtype=float),
    )


# ---------------------------------------------------------------------------
# regularity classification


def classify_regularity(
    scheme: CoefficientScheme,
    spectrum: SpectrumModel,
    k: int,
    which: str = "f",
) -> bool | None:
    """Sufficient almost-sure C^k regularity of the idealized (untruncated)
    field implied by the scheme's decay rate.

    which selects the classified field: "f" is the conformal factor field,
    "h" its image under the reference operator.  Returns None for explicit
    schemes (no asymptotic rule, indeterminate).  Heat-kernel schemes always
    classify as regular (samples are real-analytic).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if which not in ("f", "h"):
        raise ValueError('which must be "f" or "h"')
    if scheme.rule == "explicit":
        return None
    if scheme.rule == "heat_kernel":
        return True
    s = scheme.s
    if scheme.rule == "sphere_normalized_power_law":
        # weight decay m^-s; the factor field gains two orders from the
        # inverse eigenvalues, the image field does not
        if which == "h":
            return s > 2 * k + 3
        return s > 2 * k - 1
    # power law c_j = lambda_j^-s
    if spectrum.geometry is Geometry.ROUND_SPHERE4_PANEITZ:
        # eigenfunction count grows linearly in the eigenvalue, so the decay
        # exponent in the eigenfunction index equals s; order-4 operator
        order = 4
        t = s if which == "f" else s - 1.0
        return t > 1.0 + k / order
    n = spectrum.dimension
    s_eff = s if which == "f" else s - 1.0
    return s_eff > (n + k) / 2.0


# ---------------------------------------------------------------------------
# zeta, self-contained


def zeta_direct(s: float, n_terms: int = 1_000_000) -> float:
    """Riemann zeta by direct summation plus an Euler-Maclaurin tail.

    Accurate to well over 12 significant digits for s >= 1.1 with the default
    term count; the tail corrections are integral + half-term + first
    derivative term.
    """
    if s <= 1.0:
        raise ValueError("zeta summation requires s > 1")
    N = int(n_terms)
    m = np.arange(1, N + 1, dtype=float)
    head = float(np.sum(m ** (-s)))
    tail = N ** (1.0 - s) / (s - 1.0) - 0.5 * N ** (-s) + (s / 12.0) * N ** (-s - 1.0)
    return head + tail


# ---------------------------------------------------------------------------
# user-supplied spectrum files
#
# Layout (documented in the README): '#' starts a comment; header lines
#   dimension <int>
#   volume <float>
#   points <int>
# optionally followed by exactly <points> lines "point <coord> ...", then one
# record per eigenfunction:
#   ef <lambda> <v_1> ... <v_points>
# A negative lambda marks a negative-spectrum level with mu = |lambda|.
# Consecutive records whose lambdas agree to relative tolerance 1e-9 form one
# level (multiplicity = record count).


def load_spectrum_file(path) -> SpectrumModel:
    path = Path(path)
    dimension = None
    volume = None
    n_points = None
    points: list[list[float]] = []
    lams: list[float] = []
    rows: list[np.ndarray] = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        if key == "dimension":
            dimension = int(parts[1])
        elif key == "volume":
            volume = float(parts[1])
        elif key == "points":
            n_points = int(parts[1])
        elif key == "point":
            points.append([float(x) for x in parts[1:]])
        elif key == "ef":
            if n_points is None:
                raise ValueError(f"{path}: 'points' header must precede eigenfunction records")
            vals = np.array([float(x) for x in parts[2:]], dtype=float)
            if vals.size != n_points:
                raise ValueError(
                    f"{path}: eigenfunction record has {vals.size} values, expected {n_points}"
                )
            lams.append(float(parts[1]))
            rows.append(vals)
        else:
            raise ValueError(f"{path}: unrecognized record {key!r}")
    if dimension is None or volume is None or n_points is None:
        raise ValueError(f"{path}: header must set dimension, volume and points")
    if points and len(points) != n_points:
        raise ValueError(f"{path}: expected {n_points} point lines, found {len(points)}")
    if not rows:
        raise ValueError(f"{path}: no eigenfunction records")
    lam_arr = np.array(lams)
    if np.any(lam_arr == 0.0):
        raise ValueError(f"{path}: zero eigenvalues are not allowed (constants excluded)")

    def group(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        vals = np.abs(lam_arr[idx])
        order = idx[np.argsort(vals, kind="stable")]
        sv = np.abs(lam_arr[order])
        levels, mults = [], []
        i = 0
        while i < sv.size:
            j = i + 1
            while j < sv.size and abs(sv[j] - sv[i]) <= _LEVEL_MATCH_RTOL * max(sv[i], 1.0):
                j += 1
            levels.append(float(np.mean(sv[i:j])))
            mults.append(j - i)
            i = j
        return np.array(levels), np.array(mults, dtype=int), order

    pos_idx = np.nonzero(lam_arr > 0)[0]
    neg_idx = np.nonzero(lam_arr < 0)[0]
    if pos_idx.size == 0:
        raise ValueError(f"{path}: need at least one positive-spectrum record")
    pos_levels, pos_mults, pos_order = group(pos_idx)
    fn_matrix = np.stack([rows[i] for i in pos_order])
    neg_pairs: tuple[tuple[float, int], ...] = ()
    neg_matrix = None
    if neg_idx.size:
        neg_levels, neg_mults, neg_order = group(neg_idx)
        neg_pairs = tuple((float(mu), int(nm)) for mu, nm in zip(neg_levels, neg_mults))
        neg_matrix = np.stack([rows[i] for i in neg_order])
    return SpectrumModel(
        geometry=Geometry.USER_SUPPLIED,
        dimension=dimension,
        volume=volume,
        eigenvalues=pos_levels,
        multiplicities=pos_mults,
        negative_levels=neg_pairs,
        points=np.array(points) if points else None,
        eigenfunctions=fn_matrix,
        neg_eigenfunctions=neg_matrix,
    )


def write_spectrum_file(path, model: SpectrumModel) -> None:
    """Inverse of load_spectrum_file for user-supplied models."""
    if model.geometry is not Geometry.USER_SUPPLIED:
        raise ValueError("only user-supplied models serialize to spectrum files")
    lines = [
        f"dimension {model.dimension}",
        f"volume {model.volume!r}",
        f"points {model.eigenfunctions.shape[1]}",
    ]
    if model.points is not None:
        for p in model.points:
            lines.append("point " + " ".join(repr(float(x)) for x in p))
    row = 0
    for lam, mult in zip(model.eigenvalues, model.multiplicities):
        for _ in range(int(mult)):
            vals = " ".join(repr(float(v)) for v in model.eigenfunctions[row])
            lines.append(f"ef {float(lam)!r} {vals}")
            row += 1
    row = 0
    for mu, mult in model.negative_levels:
        for _ in range(int(mult)):
            vals = " ".join(repr(float(v)) for v in model.neg_eigenfunctions[row])
            lines.append(f"ef {-float(mu)!r} {vals}")
            row += 1
    Path(path).write_text("\n".join(lines) + "\n")
