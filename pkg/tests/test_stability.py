import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agentinvite.core import ModelParams
from agentinvite.harness.presets import EXAMPLE1, EXAMPLE2, EXAMPLE4
from agentinvite.stability import (
    COROLLARY_IDS,
    CubicCoeffs,
    SwitchedPair,
    a1_inverse,
    a2_hurwitz_condition,
    build_matrices,
    char_poly,
    condition_i,
    condition_ii,
    corollary_report,
    cqlf_exists,
    cubic_roots,
    det_poly_numerator,
    eig_tolerance,
    eigenvalues_3x3,
    is_hurwitz_cubic,
    spectral_abscissa,
    stability_report,
)
from conftest import random_params


def test_example1_matrices():
    pair = build_matrices(EXAMPLE1)
    np.testing.assert_allclose(pair.A1, [[-3, -0.4, -1], [3, -1.1, 1], [3, 0.9, -1]], atol=1e-15)
    np.testing.assert_allclose(pair.A2, [[-3, -0.5, -1], [3, -1, 1], [3, 0, -1]], atol=1e-15)
    assert pair.difference_rank_one()
    assert np.linalg.matrix_rank(pair.A1 - pair.A2) == 1


def test_rank_check_is_structural():
    I = np.eye(3)
    assert not SwitchedPair(I, I).difference_rank_one()
    J = I.copy()
    J[0, 0] = 2
    assert not SwitchedPair(I, J).difference_rank_one()


def test_char_poly_identity():
    assert char_poly(np.eye(3)).as_tuple() == (1.0, -3.0, 3.0, -1.0)


def test_char_poly_example1():
    pair = build_matrices(EXAMPLE1)
    assert char_poly(pair.A1).as_tuple() == pytest.approx((1, 5.1, 10.7, 9), rel=1e-14)
    assert is_hurwitz_cubic(char_poly(pair.A1))


def test_char_poly_closed_forms_random():
    rng = np.random.default_rng(3)
    for _ in range(500):
        p = random_params(rng)
        a, b, m, d, th, g, e = p.alpha, p.beta, p.mu, p.delta, p.theta, p.gamma, p.epsilon
        pair = build_matrices(p)
        want1 = (1, b * g + m + th, b * e + b * g * m + m * th, b * e * m)
        want2 = (1, b * g + m * (1 - a) + d, b * e + b * g * m + d * m * (1 - a), b * e * m)
        for got, want in ((char_poly(pair.A1), want1), (char_poly(pair.A2), want2)):
            for x, y in zip(got.as_tuple(), want):
                assert abs(x - y) <= 1e-10 * max(abs(y), 1e-300) + 1e-14 * max(map(abs, want))


def test_char_poly_matches_numpy():
    rng = np.random.default_rng(4)
    for _ in range(100):
        A = rng.normal(size=(3, 3))
        np.testing.assert_allclose(char_poly(A).as_tuple(), np.poly(A), rtol=1e-10, atol=1e-12)


def test_hurwitz_criterion_examples():
    assert not is_hurwitz_cubic(CubicCoeffs(1, 1, 1, 2))
    assert is_hurwitz_cubic(CubicCoeffs(1, 3, 3, 1))
    with pytest.raises(ValueError, match="not a monic-orientable cubic"):
        is_hurwitz_cubic(CubicCoeffs(0, 1, 1, 1))
    with pytest.raises(ValueError, match="not a monic-orientable cubic"):
        is_hurwitz_cubic(CubicCoeffs(-1, 1, 1, 1))


def test_example2_gamma1_a2_not_hurwitz():
    c = char_poly(build_matrices(EXAMPLE2).A2)
    assert c.as_tuple() == pytest.approx((1, 0.11, 0.0755, 0.025), rel=1e-12)
    assert not is_hurwitz_cubic(c)
    assert max(np.linalg.eigvals(build_matrices(EXAMPLE2).A2).real) > 0
    assert not a2_hurwitz_condition(EXAMPLE2)


def test_a2_condition_examples():
    assert a2_hurwitz_condition(EXAMPLE1)
    assert a2_hurwitz_condition(EXAMPLE2.with_(gamma=10.0))


def test_hurwitz_matches_numeric_eigenvalues():
    rng = np.random.default_rng(5)
    for _ in range(300):
        p = random_params(rng)
        A2 = build_matrices(p).A2
        abscissa = max(np.linalg.eigvals(A2).real)
        if abs(abscissa) > 1e-6:
            assert is_hurwitz_cubic(char_poly(A2)) == (abscissa < 0)


@settings(max_examples=300, deadline=None)
@given(
    st.floats(0, 0.99), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 10),
    st.floats(0, 10), st.floats(0.01, 10), st.floats(0.01, 10),
)
def test_a2_gain_corollary(alpha, beta, mu, delta, theta, gamma, epsilon):
    p = ModelParams(2.0, 1000, alpha, beta, mu, delta, theta, gamma, epsilon)
    if gamma > (alpha * mu - delta) / beta:
        assert a2_hurwitz_condition(p)
    assert is_hurwitz_cubic(char_poly(build_matrices(p).A1))


def test_condition_i_examples():
    ok, (first, second) = condition_i(EXAMPLE1)
    assert ok and first == 0.0 and second == pytest.approx(math.sqrt(5.25 / 6), rel=1e-14)
    ok, (first, second) = condition_i(EXAMPLE2.with_(gamma=5.0))
    assert not ok
    assert abs(first - 8.8) < 1e-12
    assert second == pytest.approx(4.7286, abs=1e-4)
    assert condition_i(EXAMPLE2.with_(gamma=10.0))[0]


def test_condition_ii_examples():
    ok, (first, second) = condition_ii(EXAMPLE1)
    assert ok and first == pytest.approx(math.sqrt(8) / 6, rel=1e-14) and second == 0.0
    ok, (first, _) = condition_ii(EXAMPLE2.with_(gamma=5.0))
    assert not ok and first == pytest.approx(14.8575, abs=1e-4)
    ok, ops = condition_ii(EXAMPLE1.with_(alpha=0.0))
    assert ok and ops == (0.0, 0.0)


def test_conditions_strict_at_equality():
    first = (EXAMPLE2.alpha * EXAMPLE2.mu - EXAMPLE2.delta) / EXAMPLE2.beta
    assert not condition_i(EXAMPLE2.with_(gamma=first))[0]


def test_example2_gamma_grid():
    got = {g: condition_i(EXAMPLE2.with_(gamma=g))[0] or condition_ii(EXAMPLE2.with_(gamma=g))[0]
           for g in (1.0, 5.0, 10.0, 20.0)}
    assert got == {1.0: False, 5.0: False, 10.0: True, 20.0: True}


def test_a1_inverse():
    assert a1_inverse(EXAMPLE1)[0, 0] == pytest.approx(-0.1 / 4.5, rel=1e-14)
    rng = np.random.default_rng(6)
    for _ in range(200):
        p = random_params(rng)
        np.testing.assert_allclose(build_matrices(p).A1 @ a1_inverse(p), np.eye(3), atol=1e-10 * max(1, p.gamma**2 * p.beta / p.epsilon))
    p = EXAMPLE1.with_(theta=0.0)
    row = a1_inverse(p)[0]
    assert row == pytest.approx([0.0, (1 - p.alpha) / p.beta, p.alpha / p.beta])


def test_a1_inverse_matches_numpy():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = random_params(rng)
        np.testing.assert_allclose(a1_inverse(p), np.linalg.inv(build_matrices(p).A1), rtol=1e-7, atol=1e-9)


def test_det_poly_constant_and_lead():
    c = det_poly_numerator(EXAMPLE1)
    assert c(0.0) == 1.0
    assert c.a0 == pytest.approx(81.0, rel=1e-14)


def _numeric_numerator(p, tau):
    pair = build_matrices(p)
    return np.linalg.det(np.linalg.inv(pair.A1) + tau * pair.A2) * (-p.beta * p.epsilon * p.mu)


def test_det_poly_oracle_examples():
    for p in (EXAMPLE1, EXAMPLE2, EXAMPLE4):
        c = det_poly_numerator(p)
        for tau in np.linspace(0, 100, 20):
            num = _numeric_numerator(p, tau)
            assert abs(c(tau) - num) <= 1e-8 * max(abs(num), 1.0)


def test_det_poly_positive_under_conditions():
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(1000):
        p = random_params(rng)
        if condition_i(p)[0] or condition_ii(p)[0]:
            c = det_poly_numerator(p)
            assert all(c(t) > 0 for t in np.linspace(0, 100, 50))
            checked += 1
    assert checked > 100


def test_cubic_roots_against_numpy():
    rng = np.random.default_rng(9)
    for _ in range(300):
        A = rng.normal(size=(3, 3)) * 10 ** rng.uniform(-2, 2)
        mine = sorted(eigenvalues_3x3(A), key=lambda z: (z.real, z.imag))
        ref = sorted(np.linalg.eigvals(A), key=lambda z: (z.real, z.imag))
        scale = 1 + np.abs(A).max()
        for a, b in zip(mine, ref):
            assert abs(a - b) < 1e-6 * scale


def test_cubic_roots_special():
    assert cubic_roots(CubicCoeffs(1, -3, 3, -1)) == [1, 1, 1]
    assert sorted(z.real for z in cubic_roots(CubicCoeffs(1, -6, 11, -6))) == pytest.approx([1, 2, 3])
    with pytest.raises(ValueError):
        cubic_roots(CubicCoeffs(0, 1, 1, 1))


def _sign_change_scan(P, n=200_000):
    """Real eigenvalues of ``P`` in [-S, 0) via sign changes of det(P - sI), refined by bisection."""
    S = 10 * np.linalg.norm(P, ord=np.inf)
    s = np.linspace(-S, 0, n, endpoint=False)
    c = np.poly(P)
    vals = np.polyval(c, s)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        lo, hi = s[i], s[i + 1]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if np.sign(np.polyval(c, mid)) == np.sign(np.polyval(c, lo)):
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return roots


def test_product_real_eigs_scan_oracle():
    rng = np.random.default_rng(10)
    agree = 0
    for _ in range(200):
        p = random_params(rng)
        pair = build_matrices(p)
        P = pair.A1 @ pair.A2
        tol = eig_tolerance(P)
        mine = sorted(z.real for z in eigenvalues_3x3(P) if abs(z.imag) <= tol and z.real < 0)
        scan = sorted(_sign_change_scan(P))
        if len(mine) == len(scan):
            assert mine == pytest.approx(scan, abs=1e-6)
            agree += 1
    # double roots do not change sign; they are rare in random draws
    assert agree >= 195


def test_cqlf_examples():
    assert cqlf_exists(build_matrices(EXAMPLE1)) is True
    assert cqlf_exists(build_matrices(EXAMPLE2.with_(gamma=10.0))) is True
    assert cqlf_exists(build_matrices(EXAMPLE2)) is False


def test_cqlf_false_when_product_has_negative_eigenvalue():
    A1 = np.array([[-1.0, 0, 0], [0, -1, 0], [0, 0, -1]])
    A2 = np.array([[-1.0, 0, 0], [0, -1, 0], [0, 0, -1]])
    # identical matrices: difference is zero, so the criterion does not apply
    assert cqlf_exists(SwitchedPair(A1, A2)) is None
    # non-Hurwitz input
    assert cqlf_exists(SwitchedPair(np.eye(3), A2)) is False


def test_cqlf_product_eigs_match_numpy_sign():
    rng = np.random.default_rng(11)
    for _ in range(500):
        p = random_params(rng)
        pair = build_matrices(p)
        verdict = cqlf_exists(pair)
        if verdict is None:
            continue
        ev = np.linalg.eigvals(pair.A1 @ pair.A2)
        tol = eig_tolerance(pair.A1 @ pair.A2)
        neg_real = any(abs(z.imag) <= tol and z.real < -tol for z in ev)
        hurwitz = max(np.linalg.eigvals(pair.A1).real) < 0 and max(np.linalg.eigvals(pair.A2).real) < 0
        if abs(max(np.linalg.eigvals(pair.A2).real)) > 1e-8:
            assert verdict == (hurwitz and not neg_real)


def test_gain_conditions_imply_cqlf_random():
    rng = np.random.default_rng(12)
    for _ in range(2000):
        p = random_params(rng)
        if condition_i(p)[0] or condition_ii(p)[0]:
            assert cqlf_exists(build_matrices(p)) is True


def test_corollary_ids_and_examples():
    rep = corollary_report(EXAMPLE1)
    assert tuple(rep) == COROLLARY_IDS
    assert rep[7].applicable and rep[7].satisfied
    assert rep[7].threshold == pytest.approx(math.sqrt(5.25 / 6))
    rep4 = corollary_report(EXAMPLE4.with_(gamma=2.3))
    assert rep4[8].applicable and rep4[8].satisfied
    assert rep4[8].threshold == pytest.approx(2.2)
    rep10 = corollary_report(ModelParams(2.0, 1000, 0.5, 1.0, 2.0, 0.0, 0.0, 2.01, 1.0))
    assert rep10[10].applicable and rep10[10].threshold == pytest.approx(2.0)
    assert rep10[10].satisfied
    assert not corollary_report(ModelParams(2.0, 1000, 0.5, 1.0, 2.0, 0.0, 0.0, 1.99, 1.0))[10].satisfied
    rep0 = corollary_report(EXAMPLE1.with_(alpha=0.0))
    assert rep0[12].applicable and rep0[12].satisfied


def test_corollaries_imply_cqlf():
    rng = np.random.default_rng(13)
    for _ in range(2000):
        p = random_params(rng)
        if rng.random() < 0.3:
            p = p.with_(delta=0.0)
        if rng.random() < 0.1:
            p = p.with_(alpha=0.0)
        for cid, res in corollary_report(p).items():
            if res.applicable and res.satisfied and cid != 5:
                assert cqlf_exists(build_matrices(p)) is True, (cid, p)


def test_stability_report_keys():
    d = stability_report(EXAMPLE1).to_dict()
    assert d["cond_i"] and d["cond_ii"] and d["cqlf_exists"] is True
    assert set(d["thresholds"]) == {"cond_i_drift", "cond_i_level", "cond_ii_drift", "cond_ii_abandon"}
    assert list(d["corollaries"]) == [str(i) for i in COROLLARY_IDS]
    assert d["char_poly_a2"] == pytest.approx([1, 5, 11.5, 9])


def test_spectral_abscissa():
    assert spectral_abscissa(np.diag([-1.0, -2.0, -3.0])) == pytest.approx(-1.0)
