import math

import numpy as np
import pytest
import scipy.special

from randcurv import spectral as sp
from randcurv.spectral import Geometry, Indexing


def test_sphere_level_values():
    assert sp.sphere_level(1) == (2, 3)
    assert sp.sphere_level(2) == (6, 5)
    assert sp.sphere_level(3) == (12, 7)
    assert sp.sphere_level(10) == (110, 21)
    with pytest.raises(ValueError):
        sp.sphere_level(0)


def test_paneitz_level_low_degrees():
    assert sp.paneitz_level_s4(1) == (24, 5)
    assert sp.paneitz_level_s4(2) == (120, 14)
    assert sp.paneitz_level_s4(3) == (360, 30)


def test_paneitz_identity_against_combinatorial_oracle():
    # multiplicity oracle: dimension of degree-m harmonics on S^4 as a
    # difference of monomial counts; eigenvalue oracle: L(L+2), L = m(m+3)
    for m in range(1, 51):
        eig, mult = sp.paneitz_level_s4(m)
        oracle_mult = math.comb(m + 4, 4) - math.comb(m + 2, 4)
        L = m * (m + 3)
        assert mult == oracle_mult
        assert eig == L * (L + 2)


def test_torus_levels_match_lattice_count():
    spec = sp.torus2_spectrum(12)
    r = 8
    k1, k2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    norms = (k1**2 + k2**2).ravel()
    for e, mult in zip(spec.eigenvalues, spec.multiplicities):
        assert mult == int(np.sum(norms == e))


def test_torus_mode_representatives():
    spec = sp.torus2_spectrum(8)
    for e, reps, mult in zip(spec.eigenvalues, spec.torus_modes, spec.multiplicities):
        assert mult == 2 * reps.shape[0]
        for k1, k2 in reps:
            assert k1 * k1 + k2 * k2 == e
            assert k1 > 0 or (k1 == 0 and k2 > 0)
        as_tuples = [tuple(row) for row in reps]
        assert as_tuples == sorted(as_tuples)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        sp.SpectrumModel(Geometry.SPHERE2, 2, 4 * math.pi, np.array([2.0, 2.0]), np.array([3, 5]))
    with pytest.raises(ValueError):
        sp.SpectrumModel(Geometry.SPHERE2, 2, 4 * math.pi, np.array([0.0, 2.0]), np.array([1, 3]))
    with pytest.raises(ValueError):
        sp.SpectrumModel(Geometry.SPHERE2, 2, 4 * math.pi, np.array([2.0]), np.array([0]))


def test_zeta_direct_against_scipy():
    for s in (1.5, 2.0, 3.0, 4.5, 8.0, 12.0):
        ref = float(scipy.special.zeta(s, 1.0))
        assert abs(sp.zeta_direct(s) - ref) <= 1e-12 * abs(ref)


def test_sphere_normalized_mass_budget():
    for s, M in ((8.0, 12), (9.5, 10), (12.0, 8)):
        sch = sp.make_sphere_normalized(s, M)
        assert abs(sch.truncated_sum + sch.tail_fraction - 1.0) < 1e-8
        assert sch.indexing is Indexing.PER_EIGENSPACE
        ref_K = 1.0 / float(scipy.special.zeta(s, 1.0))
        assert abs(sch.normalization - ref_K) <= 1e-12 * ref_K


def test_sphere_normalized_rejects_heavy_tail():
    with pytest.raises(ValueError):
        sp.make_sphere_normalized(8.0, 4)
    # but an explicit opt-out records the estimate instead
    sch = sp.make_sphere_normalized(8.0, 4, tail_tol=None)
    assert sch.tail_fraction > 1e-8


def test_power_law_values_and_tail():
    spec = sp.sphere2_spectrum(40)
    sch = sp.make_power_law(3.0, spec, 40, tail_tol=None)
    assert np.allclose(sch.values, spec.eigenvalues ** (-3.0), rtol=0, atol=0)
    # oracle: extend the level-variance series far beyond the truncation
    m = np.arange(1.0, 100001.0)
    lam = m * (m + 1)
    terms = (2 * m + 1) * lam ** (2 - 2 * 3.0)
    head = float(np.sum(terms[:40]))
    far = float(np.sum(terms[40:]))
    true_frac = far / (head + far)
    assert sch.tail_fraction == pytest.approx(true_frac, rel=1e-3)
    assert sch.tail_fraction >= true_frac * (1 - 1e-6)


def test_power_law_divergent_tail_is_total():
    spec = sp.sphere2_spectrum(10)
    sch = sp.make_power_law(1.2, spec, 10, tail_tol=None)
    assert sch.tail_fraction == 1.0


def test_heat_kernel_values_and_tail():
    spec = sp.sphere2_spectrum(30)
    sch = sp.make_heat_kernel(0.3, spec, 30, tail_tol=None)
    lam = spec.eigenvalues
    assert np.allclose(sch.values, np.exp(-lam * 0.15) / lam, rtol=1e-15)
    m = np.arange(1.0, 3001.0)
    terms = (2 * m + 1) * np.exp(-m * (m + 1) * 0.3)
    far = float(np.sum(terms[30:]))
    head = float(np.sum(terms[:30]))
    true_frac = far / (head + far)
    assert sch.tail_fraction >= true_frac
    assert sch.tail_fraction < 1e-20


def test_torus_power_tail_estimate():
    spec = sp.torus2_spectrum(20)
    sch = sp.make_power_law(2.5, spec, 20, tail_tol=None)
    # brute-force oracle over a large lattice window
    r = 400
    k1, k2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    n2 = (k1**2 + k2**2).astype(float).ravel()
    n2 = n2[(n2 > 0) & (n2 <= r * r)]
    e_max = spec.eigenvalues[19]
    head = float(np.sum(n2[n2 <= e_max] ** (2 - 5.0)))
    far = float(np.sum(n2[n2 > e_max] ** (2 - 5.0)))
    true_frac = far / (head + far)
    assert sch.tail_fraction == pytest.approx(true_frac, rel=5e-2)


def test_classify_regularity_thresholds():
    spec2 = sp.sphere2_spectrum(12)
    sch = sp.make_sphere_normalized(8.0, 12)
    # image field: continuous through k=2, not guaranteed at k=3
    assert sp.classify_regularity(sch, spec2, 0, "h") is True
    assert sp.classify_regularity(sch, spec2, 2, "h") is True
    assert sp.classify_regularity(sch, spec2, 3, "h") is False
    # factor field gains two derivatives
    assert sp.classify_regularity(sch, spec2, 4, "f") is True
    assert sp.classify_regularity(sch, spec2, 5, "f") is False

    pl = sp.make_power_law(3.0, spec2, 10, tail_tol=None)
    assert sp.classify_regularity(pl, spec2, 1, "f") is True     # 3 > (2+1)/2
    assert sp.classify_regularity(pl, spec2, 1, "h") is True     # 2 > 1.5
    assert sp.classify_regularity(pl, spec2, 2, "h") is False    # 2 > 2 fails

    hk = sp.make_heat_kernel(1.0, spec2, 10)
    assert sp.classify_regularity(hk, spec2, 25, "h") is True

    ex = sp.make_explicit([0.5, 0.5])
    assert sp.classify_regularity(ex, spec2, 0, "h") is None


def test_classify_regularity_monotone_in_k():
    spec = sp.sphere2_spectrum(10)
    for sch in (
        sp.make_sphere_normalized(9.0, 10),
        sp.make_power_law(2.7, spec, 10, tail_tol=None),
        sp.make_heat_kernel(0.7, spec, 10),
    ):
        for which in ("f", "h"):
            flags = [sp.classify_regularity(sch, spec, k, which) for k in range(8)]
            # once regularity fails at some order it stays failed
            for lo, hi in zip(flags, flags[1:]):
                assert not (hi and not lo)


def test_paneitz_power_law_regularity():
    spec = sp.s4_paneitz_spectrum(10)
    pl = sp.make_power_law(2.0, spec, 10, tail_tol=None)
    assert sp.classify_regularity(pl, spec, 3, "f") is True      # 2 > 1 + 3/4
    assert sp.classify_regularity(pl, spec, 4, "f") is False     # 2 > 2 fails
    assert sp.classify_regularity(pl, spec, 0, "h") is False     # 1 > 1 fails


def test_explicit_scheme_shape():
    sch = sp.make_explicit([0.25, 0.5, 0.25], neg_values=[0.1])
    assert sch.truncation == 3
    assert sch.tail_fraction == 0.0
    assert sch.neg_values.tolist() == [0.1]
    with pytest.raises(ValueError):
        sp.make_explicit([-0.1, 1.0])


def test_spectrum_file_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(6, 3))
    fns = rng.normal(size=(4, 6))
    neg = rng.normal(size=(1, 6))
    model = sp.SpectrumModel(
        geometry=Geometry.USER_SUPPLIED,
        dimension=2,
        volume=11.5,
        eigenvalues=np.array([2.0, 5.0]),
        multiplicities=np.array([3, 1]),
        negative_levels=((4.0, 1),),
        points=pts,
        eigenfunctions=fns,
        neg_eigenfunctions=neg,
    )
    path = tmp_path / "spec.txt"
    sp.write_spectrum_file(path, model)
    back = sp.load_spectrum_file(path)
    assert back.dimension == 2
    assert back.volume == 11.5
    np.testing.assert_array_equal(back.eigenvalues, model.eigenvalues)
    np.testing.assert_array_equal(back.multiplicities, model.multiplicities)
    assert back.negative_levels == ((4.0, 1),)
    np.testing.assert_allclose(back.points, pts, rtol=0, atol=0)
    np.testing.assert_allclose(back.eigenfunctions, fns, rtol=0, atol=0)
    np.testing.assert_allclose(back.neg_eigenfunctions, neg, rtol=0, atol=0)


def test_spectrum_file_groups_repeated_eigenvalues(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text(
        "dimension 2\nvolume 1.0\npoints 2\n"
        "ef 3.0 1.0 0.0\n"
        "ef 3.0000000000001 0.0 1.0\n"   # same level to rel tol 1e-9
        "ef 7.0 1.0 1.0\n"
    )
    model = sp.load_spectrum_file(path)
    np.testing.assert_allclose(model.eigenvalues, [3.0, 7.0], rtol=1e-12)
    np.testing.assert_array_equal(model.multiplicities, [2, 1])


def test_spectrum_file_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("dimension 2\nvolume 1.0\npoints 3\nef 2.0 1.0 0.0\n")
    with pytest.raises(ValueError):
        sp.load_spectrum_file(bad)
    bad.write_text("dimension 2\nvolume 1.0\npoints 1\nef 0.0 1.0\n")
    with pytest.raises(ValueError):
        sp.load_spectrum_file(bad)
