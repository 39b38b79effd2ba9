import math

import numpy as np
import pytest

from helpers import oracle_harmonic_columns, slow_sphere_field

from randcurv import fields as fl
from randcurv import spectral as sp
from randcurv.fields import FieldKind, RandomFieldSpec
from randcurv.grids import fibonacci_sphere, icosphere, torus_grid
from randcurv.spectral import Geometry, Indexing


@pytest.fixture(scope="module")
def sphere12():
    return sp.sphere2_spectrum(12)


@pytest.fixture(scope="module")
def norm8(sphere12):
    return sp.make_sphere_normalized(8.0, 12)


@pytest.fixture(scope="module")
def h_spec(sphere12, norm8):
    return RandomFieldSpec(sphere12, norm8, FieldKind.H)


def test_spec_validation(sphere12, norm8):
    with pytest.raises(ValueError):
        RandomFieldSpec(sphere12, norm8, FieldKind.W)              # missing reference
    with pytest.raises(ValueError):
        RandomFieldSpec(sphere12, norm8, FieldKind.V, reference_curvature=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        RandomFieldSpec(sp.sphere2_spectrum(5), norm8, FieldKind.H)   # truncation 12 > 5 levels


def test_level_weights_sphere_conventions(sphere12, norm8):
    lw = fl.level_weights(RandomFieldSpec(sphere12, norm8, FieldKind.H))
    lam = sphere12.eigenvalues
    N = sphere12.multiplicities.astype(float)
    np.testing.assert_allclose(lw.alpha, np.sqrt(4 * math.pi * norm8.values / N) / lam)
    np.testing.assert_allclose(lw.beta, -lam * lw.alpha)
    # per-eigenfunction: alpha is the scheme value itself
    pl = sp.make_power_law(3.0, sphere12, 12, tail_tol=None)
    lw2 = fl.level_weights(RandomFieldSpec(sphere12, pl, FieldKind.H))
    np.testing.assert_allclose(lw2.alpha, pl.values)


def test_covariance_h_sphere_values(sphere12, norm8, h_spec):
    assert fl.covariance_h_sphere(h_spec, 0.0) == pytest.approx(norm8.truncated_sum, abs=1e-14)
    signs = (-1.0) ** np.arange(1, 13)
    assert fl.covariance_h_sphere(h_spec, math.pi) == pytest.approx(
        float(np.sum(norm8.values * signs)), abs=1e-14
    )
    single = RandomFieldSpec(sphere12, sp.make_explicit([1.0]), FieldKind.H)
    assert fl.covariance_h_sphere(single, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        fl.covariance_h_sphere(RandomFieldSpec(sphere12, norm8, FieldKind.F), 0.3)


def test_covariance_f_sphere_values(sphere12, norm8):
    f_spec = RandomFieldSpec(sphere12, norm8, FieldKind.F)
    single = RandomFieldSpec(sphere12, sp.make_explicit([1.0]), FieldKind.F)
    assert fl.covariance_f_sphere(single, 0.0) == pytest.approx(0.25, abs=1e-15)
    lam = sphere12.eigenvalues
    assert fl.covariance_f_sphere(f_spec, 0.0) == pytest.approx(
        float(np.sum(norm8.values / lam**2)), abs=1e-14
    )


def test_covariance_f_matches_harmonic_brute_force():
    # independent oracle: explicit harmonic summation through scipy at d = pi/3
    spec10 = sp.sphere2_spectrum(10)
    sch = sp.make_sphere_normalized(8.0, 10, tail_tol=None)
    f_spec = RandomFieldSpec(spec10, sch, FieldKind.F)
    theta = np.array([0.9, 0.9 + math.pi / 3])
    phi = np.array([0.4, 0.4])
    Y = oracle_harmonic_columns(10, theta, phi)
    lw = fl.level_weights(f_spec)
    w = np.repeat(lw.alpha, spec10.multiplicities[:10])
    brute = float(np.sum(w**2 * Y[0] * Y[1]))
    assert fl.covariance_f_sphere(f_spec, math.pi / 3) == pytest.approx(brute, abs=1e-10)


def test_sampler_matches_slow_reference(h_spec):
    theta = np.array([0.3, 1.2, 2.8])
    phi = np.array([5.1, 0.2, 3.3])
    smp = fl.SphereSampler(h_spec, (theta, phi))
    s = smp.sample(seed=11, draw_index=4)
    lw = fl.level_weights(h_spec)
    ref_h = slow_sphere_field(lw.beta, s.gaussians, theta, phi)
    ref_f = slow_sphere_field(lw.alpha, s.gaussians, theta, phi)
    np.testing.assert_allclose(s.values_h, ref_h, atol=1e-12)
    np.testing.assert_allclose(s.values_f, ref_f, atol=1e-12)


def test_zero_draws_give_zero_fields(h_spec):
    smp = fl.SphereSampler(h_spec, (np.array([0.7]), np.array([0.1])))
    z = np.zeros(smp.n_gaussians)
    assert np.all(smp.basis.Y @ (smp.wf * z) == 0.0)
    assert np.all(smp.basis.Y @ (smp.wh * z) == 0.0)


def test_unit_variance_and_covariance_mc(h_spec):
    # sampler/kernel consistency at several distances, 3 SE
    base_th, base_ph = 0.8, 2.0
    dists = np.array([0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])
    theta = np.concatenate([[base_th], base_th + dists[1:]])
    phi = np.full(4, base_ph)
    smp = fl.SphereSampler(h_spec, (theta, phi))
    n = 30000
    _, H, _ = smp.sample_block(2024, np.arange(n))
    var = H[:, 0].var()
    se_var = math.sqrt(2.0 / n)
    assert abs(var - 1.0) < 3 * se_var + 3e-9
    for j in (1, 2, 3):
        emp = float(np.mean(H[:, 0] * H[:, j]))
        ref = fl.covariance_h_sphere(h_spec, dists[j])
        se = math.sqrt((1.0 + ref**2) / n)
        assert abs(emp - ref) < 3 * se


def test_determinism_and_block_consistency(h_spec):
    g = fibonacci_sphere(64)
    smp = fl.SphereSampler(h_spec, g, want_gradient=True)
    s1 = smp.sample(99, 7)
    s2 = smp.sample(99, 7)
    assert np.array_equal(s1.values_f, s2.values_f)
    assert np.array_equal(s1.values_h, s2.values_h)
    assert np.array_equal(s1.values_gradsq, s2.values_gradsq)
    # block evaluation is bitwise reproducible for identical index sets and
    # matches the single-draw path to rounding (different BLAS kernel)
    F, H, G = smp.sample_block(99, [5, 6, 7])
    F2, H2, G2 = smp.sample_block(99, [5, 6, 7])
    assert np.array_equal(F, F2) and np.array_equal(H, H2) and np.array_equal(G, G2)
    np.testing.assert_allclose(F[2], s1.values_f, atol=1e-12)
    np.testing.assert_allclose(H[2], s1.values_h, atol=1e-12)
    np.testing.assert_allclose(G[2], s1.values_gradsq, atol=1e-12)
    s3 = smp.sample(100, 7)
    assert not np.array_equal(s1.values_h, s3.values_h)


def test_philox_streams_disjoint():
    a = fl.gaussian_draws(1, 0, 1000)
    b = fl.gaussian_draws(1, 1, 1000)
    assert not np.array_equal(a[1:], b[:-1])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.12
    with pytest.raises(ValueError):
        fl.gaussian_draws(1, -1, 4)


def test_torus_sampler_variance_and_translation():
    t1 = sp.torus2_spectrum(1)
    ex = sp.make_explicit([1.0], indexing=Indexing.PER_EIGENFUNCTION)
    rt = RandomFieldSpec(t1, ex, FieldKind.H)
    vs = fl.variance_summary(rt, torus_grid(8))
    assert vs.sigma2_sup == pytest.approx(1.0 / math.pi**2, rel=1e-14)
    assert vs.is_constant
    # translation invariance: same displacement, different base points
    pts = np.array([[0.3, 1.0], [0.8, 1.7], [4.0, 2.2], [4.5, 2.9]])
    smp = fl.TorusSampler(rt, pts)
    _, H, _ = smp.sample_block(5, np.arange(30000))
    c_a = float(np.mean(H[:, 0] * H[:, 1]))
    c_b = float(np.mean(H[:, 2] * H[:, 3]))
    se = math.sqrt(2.0) * vs.sigma2_sup / math.sqrt(30000)
    assert abs(c_a - c_b) < 3 * se
    ref = fl.kernel_for(rt).at_displacement(np.array([0.5, 0.7]))
    assert abs(c_a - ref) < 3 * se


def test_torus_sampler_matches_direct_modes():
    t2 = sp.torus2_spectrum(2)
    ex = sp.make_explicit([0.9, 0.4], indexing=Indexing.PER_EIGENFUNCTION)
    rt = RandomFieldSpec(t2, ex, FieldKind.H)
    pts = np.array([[0.5, 2.5], [3.1, 0.2]])
    smp = fl.TorusSampler(rt, pts)
    s = smp.sample(21, 3)
    # slow reference: enumerate modes in the documented order
    norm = 1.0 / (math.pi * math.sqrt(2.0))
    ref_f = np.zeros(2)
    ref_h = np.zeros(2)
    i = 0
    for lev, c in ((0, 0.9), (1, 0.4)):
        lam = t2.eigenvalues[lev]
        for k in t2.torus_modes[lev]:
            for trig in (np.cos, np.sin):
                phi = trig(pts @ k) * norm
                ref_f += c * s.gaussians[i] * phi
                ref_h += -lam * c * s.gaussians[i] * phi
                i += 1
    np.testing.assert_allclose(s.values_f, ref_f, atol=1e-13)
    np.testing.assert_allclose(s.values_h, ref_h, atol=1e-13)


def test_cholesky_single_point_and_antipodes(sphere12):
    single = RandomFieldSpec(sphere12, sp.make_explicit([0.6, 0.4]), FieldKind.H)
    p = np.array([[0.0, 0.0, 1.0]])
    vals = np.array(
        [fl.sample_cholesky(single, p, 77, j).values_which[0] for j in range(20000)]
    )
    assert abs(vals.var() - 1.0) < 3 * math.sqrt(2.0 / 20000)
    odd = RandomFieldSpec(sphere12, sp.make_explicit([0.7, 0.0, 0.3]), FieldKind.H)
    pts = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    v = np.array([fl.sample_cholesky(odd, pts, 8, j).values_which for j in range(4000)])
    corr = np.corrcoef(v[:, 0], v[:, 1])[0, 1]
    assert corr == pytest.approx(-1.0, abs=1e-6)


def test_cholesky_agrees_with_harmonic_sampler(h_spec):
    # same covariance from both samplers on a common 12-point set
    rng = np.random.default_rng(0)
    xyz = rng.normal(size=(12, 3))
    xyz /= np.linalg.norm(xyz, axis=1, keepdims=True)
    n = 20000
    smp = fl.SphereSampler(h_spec, xyz)
    _, H, _ = smp.sample_block(31, np.arange(n))
    emp_direct = H.T @ H / n
    v = np.array([fl.sample_cholesky(h_spec, xyz, 32, j).values_which for j in range(n)])
    emp_chol = v.T @ v / n
    K = fl.kernel_for(h_spec).matrix(xyz)
    for emp in (emp_direct, emp_chol):
        se = np.sqrt((np.outer(np.diag(K), np.diag(K)) + K**2) / n)
        assert np.all(np.abs(emp - K) < 3.5 * se)


def test_cholesky_jitter_on_duplicate_points(h_spec, caplog):
    pts = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])      # exactly singular
    with caplog.at_level("INFO", logger="randcurv.fields"):
        s = fl.sample_cholesky(h_spec, pts, 5, 0)
    assert s.jitter > 0.0
    assert s.values_which[0] == pytest.approx(s.values_which[1], rel=1e-5)


def test_variance_summary_fields(sphere12, norm8, h_spec):
    g = fibonacci_sphere(50)
    vs = fl.variance_summary(h_spec, g)
    assert vs.sigma2_sup == pytest.approx(norm8.truncated_sum, rel=1e-13)
    assert vs.is_constant
    v_spec = RandomFieldSpec(sphere12, norm8, FieldKind.V, reference_curvature=2.0)
    assert fl.variance_summary(v_spec, g).sigma2_sup == pytest.approx(
        norm8.truncated_sum / 4.0, rel=1e-13
    )
    w_spec = RandomFieldSpec(sphere12, norm8, FieldKind.W, reference_curvature=1.0)
    lam = sphere12.eigenvalues
    expect = float(np.sum(norm8.values * (1.0 - 1.0 / lam) ** 2))
    assert fl.variance_summary(w_spec, g).sigma2_sup == pytest.approx(expect, rel=1e-13)


def test_variance_summary_user_supplied_argmax():
    # two points with unequal diagonal: argmax at the larger one
    model = sp.SpectrumModel(
        geometry=Geometry.USER_SUPPLIED,
        dimension=2,
        volume=1.0,
        eigenvalues=np.array([2.0]),
        multiplicities=np.array([1]),
        points=np.array([[0.0], [1.0]]),
        eigenfunctions=np.array([[0.5, 2.0]]),
    )
    spec = RandomFieldSpec(model, sp.make_explicit([1.0], indexing=Indexing.PER_EIGENFUNCTION), FieldKind.H)
    vs = fl.variance_summary(spec, None)
    assert vs.argmax_index == 1
    assert not vs.is_constant
    assert vs.sigma2_sup == pytest.approx((2.0 * 2.0) ** 2)


def test_w_identity_through_sampler(h_spec, sphere12, norm8):
    # w = h + R0 f computed from sampled arrays matches the per-level weights
    g = fibonacci_sphere(32)
    smp = fl.SphereSampler(h_spec, g)
    s = smp.sample(3, 1)
    w_direct = s.values_h + 1.0 * s.values_f
    lw = fl.level_weights(h_spec)
    ref = slow_sphere_field(lw.beta + 1.0 * lw.alpha, s.gaussians, g.theta, g.phi)
    np.testing.assert_allclose(w_direct, ref, atol=1e-12)


def test_heat_variance_sphere_asymptotics(sphere12):
    hv = fl.heat_variance(sphere12, 0.01)
    assert hv.is_constant
    assert 4 * math.pi * 0.01 * hv.sup == pytest.approx(1.0, abs=0.05)
    hv6 = fl.heat_variance(sphere12, 6.0)
    assert hv6.sup / ((3 / (4 * math.pi)) * math.exp(-12.0)) == pytest.approx(1.0, abs=0.01)
    # pointwise monotone decreasing in T
    sups = [fl.heat_variance(sphere12, T).sup for T in (0.05, 0.1, 0.5, 1.0, 3.0)]
    assert all(a > b for a, b in zip(sups, sups[1:]))
    with pytest.raises(ValueError):
        fl.heat_variance(sphere12, 0.0)


def test_heat_variance_user_two_level():
    model = sp.SpectrumModel(
        geometry=Geometry.USER_SUPPLIED,
        dimension=2,
        volume=1.0,
        eigenvalues=np.array([1.0, 3.0]),
        multiplicities=np.array([1, 1]),
        eigenfunctions=np.array([[1.0, 0.5], [0.2, 1.5]]),
    )
    hv = fl.heat_variance(model, 0.7)
    direct = math.exp(-0.7) * np.array([1.0, 0.25]) + math.exp(-2.1) * np.array([0.04, 2.25])
    np.testing.assert_allclose(hv.values, direct, rtol=1e-14)
    assert hv.sup == pytest.approx(float(direct.max()))


def test_gradient_variance_closed_form_and_mc(sphere12, norm8):
    single = RandomFieldSpec(sphere12, sp.make_explicit([1.0]), FieldKind.F)
    assert fl.gradient_variance_sphere(single) == pytest.approx(0.5, rel=1e-14)
    spec = RandomFieldSpec(sphere12, norm8, FieldKind.F)
    lam = sphere12.eigenvalues
    expect = float(np.sum(norm8.values / lam))
    assert fl.gradient_variance_sphere(spec) == pytest.approx(expect, rel=1e-14)
    smp = fl.SphereSampler(spec, (np.array([1.234]), np.array([0.77])), want_gradient=True)
    n = 30000
    _, _, G = smp.sample_block(60, np.arange(n))
    se = G.std() / math.sqrt(n)
    assert abs(G.mean() - expect) < 3 * se
    t = sp.torus2_spectrum(2)
    with pytest.raises(ValueError):
        fl.gradient_variance_sphere(
            RandomFieldSpec(t, sp.make_explicit([1.0, 1.0], indexing=Indexing.PER_EIGENFUNCTION), FieldKind.F)
        )


def test_degeneracy_antipodal_covariance(sphere12):
    even = RandomFieldSpec(sphere12, sp.make_explicit([0.0, 0.5, 0.0, 0.5]), FieldKind.H)
    assert fl.covariance_h_sphere(even, math.pi) == pytest.approx(1.0, abs=1e-14)
    g = fibonacci_sphere(64)
    smp = fl.SphereSampler(even, g)
    s = smp.sample(9, 0)
    # antipodal symmetry of every even-only sample
    flipped = fl.SphereSampler(even, -g.xyz).sample(9, 0)
    np.testing.assert_allclose(s.values_h, flipped.values_h, atol=1e-12)
    mixed = RandomFieldSpec(sphere12, sp.make_explicit([0.1, 0.5, 0.0, 0.4]), FieldKind.H)
    assert fl.covariance_h_sphere(mixed, math.pi) < 1.0 - 0.19


def test_gaussian_draw_block_bit_identical_to_single_draws():
    idx = [0, 1, 5, 17, 2**40, 2**70]
    B = fl.gaussian_draw_block(321, idx, 7)
    assert B.shape == (6, 7)
    for r, j in enumerate(idx):
        assert np.array_equal(B[r], fl.gaussian_draws(321, j, 7))
    with pytest.raises(ValueError):
        fl.gaussian_draw_block(321, [3, -1], 7)
