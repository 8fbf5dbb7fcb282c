import math

import numpy as np
import pytest

from subshift_spectra import Mat2, Potential, cocycle_product, transfer_matrix
from subshift_spectra.sl2 import (
    DegenerateAngleError,
    EllipticError,
    PI,
    cone_certificate,
    peak_angle,
    proj_angle,
    proj_dist,
    random_transfer_products,
    scaled_product_check,
    svd_angles,
    svd_angles_stack,
)
from subshift_spectra.words import UnknownLetterError

from conftest import rng


def test_transfer_matrix_examples():
    assert transfer_matrix(5.0, 5.0) == Mat2(0.0, -1.0, 1.0, 0.0)
    assert transfer_matrix(2.0, 0.0) == Mat2(2.0, -1.0, 1.0, 0.0)
    assert transfer_matrix(0.0, 5.0) == Mat2(-5.0, -1.0, 1.0, 0.0)
    assert transfer_matrix(1.7, 0.3).det == 1.0


def test_cocycle_empty_and_single(pot04):
    assert cocycle_product("", 2.3, pot04) == Mat2.IDENTITY
    assert cocycle_product("b", 1.5, pot04) == transfer_matrix(1.5, 4.0)


def test_cocycle_two_letter_against_direct_multiplication(pot04):
    # independent oracle: plain numpy product in the same order
    for energy in (-1.0, 0.0, 0.5, 2.0, 7.0):
        got = cocycle_product("ab", energy, pot04).as_array()
        oracle = (
            np.array([[energy - 4.0, -1.0], [1.0, 0.0]])
            @ np.array([[energy, -1.0], [1.0, 0.0]])
        )
        assert np.array_equal(got, oracle)
        # closed form [[ (E-4)E-1, -(E-4)], [E, -1]]
        assert got[0, 0] == (energy - 4.0) * energy - 1.0
        assert got[1, 0] == energy


def test_cocycle_composition_order_convention(pot04):
    # product over a concatenation equals (suffix product) @ (prefix product);
    # integer inputs keep every float operation exact
    u, v = "abba", "baab"
    for energy in (-2.0, 0.0, 1.0, 3.0):
        left = cocycle_product(u + v, energy, pot04)
        right = cocycle_product(v, energy, pot04) @ cocycle_product(u, energy, pot04)
        assert left == right


def test_cocycle_unknown_letter(pot04):
    with pytest.raises(UnknownLetterError):
        cocycle_product("az", 1.0, pot04)


def test_determinant_drift():
    # fp determinant drift scales like eps * norm^2: the 1e-9 budget is
    # checkable up to norms ~1e2, and a quadratic envelope holds to 1e6
    for m in random_transfer_products(10_000, seed=101, norm_max=1e2):
        assert abs(m.det - 1.0) <= 1e-9
    for m in random_transfer_products(2_000, seed=102, norm_max=1e6):
        assert abs(m.det - 1.0) <= 1e-12 * max(m.norm, 1.0) ** 2


def test_svd_angles_diagonal():
    split = svd_angles(Mat2.diagonal(2.0))
    assert split.u == 0.0
    assert split.s == PI / 2
    assert split.lam == 2.0


def test_svd_angles_by_construction():
    m = Mat2.rotation(0.3) @ Mat2.diagonal(3.0) @ Mat2.rotation(PI / 2 - 1.1)
    split = svd_angles(m)
    assert abs(split.u - 0.3) < 1e-12
    assert abs(split.s - 1.1) < 1e-12
    assert abs(split.lam - 3.0) < 1e-12


def test_svd_roundtrip_suite():
    worst = 0.0
    for m in random_transfer_products(10_000, seed=7, norm_max=1e6):
        split = svd_angles(m)
        r = split.reconstruct()
        err = math.sqrt(
            (r.a - m.a) ** 2 + (r.b - m.b) ** 2 + (r.c - m.c) ** 2 + (r.d - m.d) ** 2
        )
        worst = max(worst, err / split.lam)
        assert err <= 1e-8 * split.lam
    assert worst < 1e-10  # typical accuracy is far below the contract


def test_svd_lam_matches_spectral_norm():
    for m in random_transfer_products(500, seed=11, norm_max=1e6):
        lam = svd_angles(m).lam
        ref = np.linalg.norm(m.as_array(), ord=2)
        assert abs(lam - ref) <= 1e-10 * ref


def test_svd_rejects_rotations():
    with pytest.raises(EllipticError):
        svd_angles(Mat2.rotation(0.7))
    with pytest.raises(EllipticError):
        svd_angles(Mat2.IDENTITY)


def test_svd_angles_stack_matches_scalar(pot04):
    energies = np.linspace(-3, 3, 101)
    mats = np.stack([cocycle_product("ab", e, pot04).as_array() for e in energies])
    u, s, log_lam, hyp = svd_angles_stack(mats)
    for i, e in enumerate(energies):
        m = cocycle_product("ab", e, pot04)
        if not hyp[i]:
            with pytest.raises(EllipticError):
                svd_angles(m)
            continue
        split = svd_angles(m)
        assert abs(u[i] - split.u) < 1e-12
        assert abs(s[i] - split.s) < 1e-12
        assert abs(log_lam[i] - split.log_lam) < 1e-12


def test_proj_dist_examples():
    assert proj_dist(0.0, 0.0) == 0.0
    assert proj_dist(0.0, PI) == 0.0
    assert abs(proj_dist(0.1, 3.1) - (PI - 3.0)) < 1e-12
    assert proj_dist((1.0, 0.0), (0.0, 2.0)) == PI / 2
    with pytest.raises(ValueError):
        proj_dist((0.0, 0.0), 1.0)


def test_proj_dist_is_a_metric():
    g = rng(23)
    angles = g.uniform(-10, 10, (3000, 3))
    for a, b, c in angles:
        dab, dba = proj_dist(a, b), proj_dist(b, a)
        assert dab == dba
        assert 0.0 <= dab <= PI / 2
        assert proj_dist(a, c) <= dab + proj_dist(b, c) + 1e-12
    assert proj_angle(-0.5) == pytest.approx(PI - 0.5)


def test_peak_angle_identity():
    res = peak_angle(2.0, 2.0, Mat2.IDENTITY)
    assert res.theta == 0.0
    assert res.l1 == 0.0
    assert res.l2 == -16.0 + 1.0 / 16.0


def test_peak_angle_matches_split():
    d = Mat2.rotation(0.2)
    res = peak_angle(100.0, 100.0, d)
    a = Mat2.diagonal(100.0) @ d @ Mat2.diagonal(100.0)
    split = svd_angles(a)
    assert proj_dist(res.theta, split.s - PI / 2) <= 1e-6


def test_peak_angle_random_agreement():
    # hypothesis-satisfying draws: theta and the split agree to 1e-6
    g = rng(31)
    checked = 0
    while checked < 10_000:
        m = g.uniform(1.0, 10.0)
        d = (
            Mat2.rotation(g.uniform(0, PI))
            @ Mat2.diagonal(m)
            @ Mat2.rotation(g.uniform(0, PI))
        )
        if proj_dist((d.a, d.c), PI / 2) <= 1e3 ** -0.25:
            continue
        lam0, lam1 = 1e3 * 10 ** g.uniform(0, 2, 2)
        res = peak_angle(lam0, lam1, d)
        a = Mat2.diagonal(lam1) @ d @ Mat2.diagonal(lam0)
        split = svd_angles(a)
        assert proj_dist(res.theta, split.s - PI / 2) <= 1e-6
        checked += 1


def test_peak_angle_outside_hypotheses_still_computes():
    # a = 0 violates the frame-angle hypothesis; the formula must still
    # return finite numbers, with no agreement implied
    d = Mat2(0.0, 1.0, -1.0, 0.5)
    res = peak_angle(5.0, 5.0, d)
    assert math.isfinite(res.theta)
    assert math.isfinite(res.l1) and math.isfinite(res.l2)


def test_peak_angle_degenerate():
    with pytest.raises(DegenerateAngleError):
        peak_angle(2.0, 2.0, Mat2(0.0, 1.0, -1.0, 0.0))


def test_scaled_product_identity_case():
    rep = scaled_product_check(1e3, 1e3, Mat2.IDENTITY, c0=10.0, kappa=0.5, lam_floor=1e3)
    assert rep.hypotheses_met and rep.hyperbolic and rep.passed
    assert rep.lam == pytest.approx(1e6)
    assert rep.u_drift == 0.0 and rep.s_drift == 0.0


def test_scaled_product_hypotheses_unmet():
    rep = scaled_product_check(2.0, 2.0, Mat2.IDENTITY, c0=10.0, kappa=0.5, lam_floor=1e3)
    assert not rep.hypotheses_met
    assert "min(lam0, lam1) >= lam_floor" in rep.failed_hypotheses
    assert not rep.passed


def test_cone_certificate_examples():
    pot = Potential({"a": 0.0, "b": 100.0})
    assert cone_certificate(0.0, pot, "a", 0.5, 3.0) is True
    assert cone_certificate(100.0, pot, "a", 0.5, 3.0) is False  # E = v(b)
    # |E - v| = 5: ray (1, 0.5) -> (4.5, 1), inside the cone with growth >= 10/3
    pot2 = Potential({"a": 100.0, "b": 0.0})
    assert cone_certificate(5.0, pot2, "a", 0.5, 3.0) is True
    with pytest.raises(ValueError):
        cone_certificate(0.0, pot, "a", 1.5, 3.0)
