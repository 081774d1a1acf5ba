from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import disk_modulus, lp_modulus, smooth_corpus, square, triangle
from hilbertgeom import _kernels as K
from hilbertgeom.body import BasedBody, ball, based, disk, ellipse, gauges, p_ball, superellipse
from hilbertgeom.convexity import (DEFAULT_EPS_GRID, ModulusCurve, boundary_beta_convexity,
                                   conjugate_exponent, dual_index, fit_beta, modulus_bruteforce,
                                   modulus_curve, modulus_refined, norm_equivalence_constant,
                                   reflect, theorem_constants, verify_corollary, verify_theorem)
from hilbertgeom.errors import InvalidInputError, NonSmoothBoundaryError, NotStrictlyConvexError

CORPUS = smooth_corpus()
NAMES = sorted(CORPUS)
EPS = np.array([0.1, 0.3, 0.7, 1.2, 1.8])


# -- closed forms ----------------------------------------------------------------


def test_disk_modulus_closed_form():
    cur = modulus_curve(based(disk()), EPS, 512)
    np.testing.assert_allclose(cur.delta, disk_modulus(EPS), atol=1e-10)


@pytest.mark.parametrize("angle", [0.0, 0.7])
def test_centered_ellipse_has_disk_modulus(angle):
    # a linear image of the Euclidean norm has the same modulus
    cur = modulus_curve(based(ellipse((2, 1), angle=angle)), EPS, 512, "refined")
    np.testing.assert_allclose(cur.delta, disk_modulus(EPS), atol=1e-9)


@pytest.mark.parametrize("p", [3, 4, 6])
def test_lp_modulus_closed_form(p):
    cur = modulus_curve(based(p_ball(p)), EPS, 512, "refined")
    np.testing.assert_allclose(cur.delta, lp_modulus(p, EPS), rtol=1e-8, atol=1e-13)


def test_trivial_endpoints():
    bb = based(disk())
    assert modulus_bruteforce(bb, 0.0, 64).delta == 0.0
    # the modulus is infinitely steep at eps = 2: admissibility noise of one
    # ulp moves y by ~1e-8 along the circle
    assert modulus_bruteforce(bb, 2.0, 64).delta == pytest.approx(1.0, abs=1e-7)
    assert modulus_refined(bb, 2.0, 64).delta == pytest.approx(1.0, abs=1e-7)


def test_undefined_without_admissible_pairs():
    # an odd grid has no antipodal pair and no admissibility switch at eps = 2
    p = modulus_bruteforce(based(disk()), 2.0, 63)
    assert not p.defined and np.isnan(p.delta)


def test_minimiser_is_admissible_unit_pair():
    bb = BasedBody(ellipse((2, 1), angle=0.3), [0.5, 0.2])
    for eps in (0.2, 1.1):
        p = modulus_refined(bb, eps, 256)
        mx, my, mxy, myx, msum = gauges(bb, np.vstack([p.x, p.y, p.x - p.y, p.y - p.x, p.x + p.y]))
        assert mx == pytest.approx(1, abs=1e-12) and my == pytest.approx(1, abs=1e-12)
        assert max(mxy, myx) >= eps
        assert p.delta == pytest.approx(1 - msum / 2, abs=1e-14)


def test_input_validation():
    with pytest.raises(InvalidInputError):
        modulus_bruteforce(based(disk()), 2.5, 64)
    with pytest.raises(InvalidInputError):
        modulus_bruteforce(based(disk()), 0.5, 8)
    with pytest.raises(InvalidInputError):
        modulus_curve(based(disk()), [0.5, 0.3], 64)
    with pytest.raises(InvalidInputError):
        modulus_bruteforce(based(ball(3)), 0.5, 64)
    with pytest.raises(NotStrictlyConvexError):
        modulus_bruteforce(based(square()), 0.5, 64)


# -- properties -----------------------------------------------------------------------


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("symmetric", [False, True])
def test_curve_monotone_and_bounded(name, symmetric):
    cur = modulus_curve(CORPUS[name], DEFAULT_EPS_GRID, 256, symmetric=symmetric)
    d = cur.delta[np.isfinite(cur.delta)]
    assert np.all(np.diff(d) >= -1e-9)
    assert np.all((d >= 0) & (d <= 1))


@pytest.mark.parametrize("name", NAMES)
@given(eps=st.floats(0.02, 1.95))
@settings(max_examples=5, deadline=None)
def test_refined_never_above_bruteforce(name, eps):
    bb = CORPUS[name]
    b = modulus_bruteforce(bb, eps, 128)
    r = modulus_refined(bb, eps, 128)
    assert r.delta <= b.delta + 1e-9


def test_refined_close_on_coarse_grid():
    # refinement recovers accuracy lost to a coarse x-grid
    eps = 0.15
    coarse = modulus_bruteforce(based(p_ball(6)), eps, 64).delta
    refined = modulus_refined(based(p_ball(6)), eps, 64).delta
    exact = lp_modulus(6, eps)
    assert abs(refined - exact) < abs(coarse - exact) and abs(refined - exact) / exact < 1e-6


@pytest.mark.parametrize("method", ["bruteforce", "refined"])
def test_parallel_matches_serial(method):
    bb = CORPUS["p4_off"]
    a = modulus_curve(bb, DEFAULT_EPS_GRID[::3], 128, method, workers=1)
    b = modulus_curve(bb, DEFAULT_EPS_GRID[::3], 128, method, workers=3)
    assert np.array_equal(a.delta, b.delta)


@pytest.mark.parametrize("name", ["ellipse_rot", "p4_off", "quartic"])
def test_backends_give_same_curve(name):
    old = K.BACKEND
    try:
        curves = {}
        for b in ("numba", "numpy"):
            K.use_backend(b)
            curves[b] = modulus_curve(CORPUS[name], EPS, 96, symmetric=name == "p4_off")
    finally:
        K.use_backend(old)
    np.testing.assert_allclose(curves["numba"].delta, curves["numpy"].delta, rtol=1e-10, atol=1e-14)


# -- exponent fitting ----------------------------------------------------------------------


def test_fit_beta_exact_power_law():
    eps = np.geomspace(0.05, 0.5, 8)
    fit = fit_beta((eps, 0.3 * eps ** 3.5))
    assert fit.beta == pytest.approx(3.5, abs=1e-12)
    assert fit.C == pytest.approx(0.3, rel=1e-12)
    assert fit.residual < 1e-12 and fit.n_points == 8


def test_fit_beta_window_and_floor():
    eps = np.geomspace(0.01, 1.0, 20)
    delta = eps ** 2
    delta[:14] = 1e-13
    with pytest.raises(InvalidInputError):
        fit_beta((eps, delta))
    fit = fit_beta((eps, eps ** 2), window=(0.1, 1.0))
    assert fit.window == (0.1, 1.0) and fit.n_points == 10


def test_fit_beta_disk_curve():
    fit = fit_beta(modulus_curve(based(disk()), np.geomspace(0.05, 0.5, 10), 256))
    assert fit.beta == pytest.approx(2.0, abs=0.05)


def test_dual_index():
    assert dual_index(2) == 2
    assert dual_index(1.5) == pytest.approx(3.0)
    for bad in (1.0, 2.5, 0.5):
        with pytest.raises(InvalidInputError):
            dual_index(bad)


@given(st.floats(1.0001, 50))
def test_conjugate_involution(q):
    assert conjugate_exponent(conjugate_exponent(q)) == pytest.approx(q, rel=1e-9)
    if q >= 2:
        assert dual_index(conjugate_exponent(q)) == pytest.approx(q, rel=1e-9)


# -- boundary exponent --------------------------------------------------------------------


def test_circle_boundary_relation():
    fit = boundary_beta_convexity(disk(), 64)
    assert fit.beta == pytest.approx(2.0, abs=1e-6)
    assert fit.C == pytest.approx(0.5, abs=1e-6)
    # exact identity on the circle
    np.testing.assert_allclose(fit.dist_tangent, fit.chord ** 2 / 2, rtol=1e-9)


@pytest.mark.parametrize("p", [3, 4, 6])
def test_superellipse_boundary_exponent(p):
    fit = boundary_beta_convexity(superellipse((p, p)), 64)
    assert fit.beta == pytest.approx(p, abs=0.2)


def test_boundary_exponent_is_worst_case():
    fit = boundary_beta_convexity(superellipse((4.0, 2.5)), 64)
    assert fit.beta == pytest.approx(4.0, abs=0.2)
    assert fit.beta == fit.local_beta.max()


def test_boundary_exponent_rejects_polygons_and_3d():
    with pytest.raises(NonSmoothBoundaryError):
        boundary_beta_convexity(square())
    with pytest.raises(InvalidInputError):
        boundary_beta_convexity(ball(3))


# -- constants and verification --------------------------------------------------------


def test_disk_theorem_constants():
    tc = theorem_constants(based(disk()))
    assert tc.beta == pytest.approx(2, abs=1e-6)
    assert tc.C_K == pytest.approx(0.5, abs=1e-6)
    assert tc.h == pytest.approx(1.0) and tc.c1 == pytest.approx(1.0)
    assert tc.C0 == pytest.approx(0.25, rel=1e-5)
    assert tc.C1 == pytest.approx(1 / 16, rel=1e-5)
    assert tc.C2 == pytest.approx(1 / np.sqrt(8))
    assert tc.C == pytest.approx(1 / 16, rel=1e-5)
    assert tc.C1_printed == pytest.approx(0.25, rel=1e-5)
    assert tc.m_raw == pytest.approx(1.0) and tc.m == 2.0 and tc.m_flagged


def test_norm_equivalence_constant():
    assert norm_equivalence_constant(based(ellipse((2, 1)))) == pytest.approx(1.0)
    assert norm_equivalence_constant(BasedBody(disk(), [0.5, 0])) == pytest.approx(0.5)


def test_reflect_swaps_gauges():
    bb = BasedBody(disk(), [0.5, 0.0])
    r = reflect(bb)
    v = np.array([[1.0, 0.3]])
    assert gauges(r, v)[0] == pytest.approx(gauges(bb, -v)[0], rel=1e-13)


@pytest.mark.parametrize("name", ["disk", "disk_off", "p4"])
def test_verify_theorem_passes(name):
    rep = verify_theorem(CORPUS[name], np.geomspace(0.05, 1.9, 6), 256)
    assert rep.passed and np.all(rep.margin >= -1e-9)
    assert np.allclose(rep.bound, rep.C * rep.eps ** rep.beta)


def test_uncorrected_case_two_constant_fails_on_disk():
    bb = based(disk())
    tc = theorem_constants(bb)
    printed = replace(tc, C=min(tc.C0, tc.C1_printed, tc.C2))
    rep = verify_theorem(bb, np.geomspace(0.05, 1.0, 5), 256, constants=printed)
    assert not rep.passed and np.min(rep.margin) < 0


def test_verify_corollary_symmetry_constant():
    rep = verify_corollary(CORPUS["disk_off"], np.geomspace(0.05, 1.9, 5), 256)
    assert rep.passed and rep.details["A"] == pytest.approx(3.0, abs=1e-3)
    rep = verify_corollary(CORPUS["ellipse"], np.geomspace(0.05, 1.9, 5), 256)
    assert rep.passed and rep.details["A"] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("make", [square, triangle])
def test_guard_rejects_polygons(make):
    with pytest.raises(NotStrictlyConvexError):
        verify_theorem(based(make()))
    with pytest.raises(NotStrictlyConvexError):
        verify_corollary(based(make()))


def test_curve_record():
    cur = modulus_curve(based(disk()), [0.5, 1.0], 64)
    assert isinstance(cur, ModulusCurve) and cur.method == "bruteforce" and cur.samples == 64
    assert len(cur.points) == 2 and cur.points[1].eps == 1.0
