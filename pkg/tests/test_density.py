import numpy as np
import pytest

from skewexact.density import (BetaParams, ThetaParams, bound_C, bridge_density_q, bridge_marginal,
                               coeffs_beta, coeffs_theta, contour_oracle, gaussian_kernel, geometric_terms,
                               omega_jk, params_from_kappa, transition_density_p, v_bar, v_beta, v_theta,
                               write_density_csv)
from skewexact.drift import drift_b1, drift_b2
from skewexact.special import mills_ratio

GRID = [-0.5, 0.25, 0.5, 0.75, 1.5]


def test_geometric_cases():
    assert tuple(geometric_terms(-1, 2, 1)) == (0, 0, 0, 0)
    assert tuple(geometric_terms(-1, 0.5, 1)) == (0, 0, 1, 1)
    assert tuple(geometric_terms(-2, -1, 1)) == (0, 2, 4, 2)


def test_omega_jk():
    assert omega_jk(1, 0, 0.3, 0.3, 1, 1) == 0
    assert omega_jk(1, 1, 0, 1, 1, 4) == pytest.approx(1.5)
    assert omega_jk(3, 0, -1, 0.5, 1, 1) == pytest.approx(2.5)


def test_coeffs_theta_table():
    th = ThetaParams(0.3, 0.2, 1.0, a_shift=0.0)
    assert np.allclose(coeffs_theta(1, 0.5, 1.0, 1.0, th), (1.0, 0.5, 0.06))
    a, t = 1.5, 0.64
    th = ThetaParams(0.3, -0.7, 1.0, a_shift=a)
    st = np.sqrt(t)
    # c~_1(a sqrt(t) + w) = (w + (a + theta1) sqrt(t)) (w + (a + theta2) sqrt(t))
    assert np.allclose(coeffs_theta(1, 0.5, 1.0, t, th),
                       (1.0, (2 * a + 0.3 - 0.7) * st, (a + 0.3) * (a - 0.7) * t))
    zero = ThetaParams(0.0, 0.0, 1.0, a_shift=0.8)
    for j in (2, 3, 4):
        assert np.allclose(coeffs_theta(j, 0.5, 1.0, 1.0, zero), 0)
    assert np.allclose(coeffs_theta(1, 0.5, 1.0, 1.0, zero), (1, 1.6, 0.64))


def test_coeffs_theta_j4_sign_flip_inside_strip():
    th = ThetaParams(0.6, 0.4, 1.0, a_shift=0.5)
    t = 0.7
    inside = coeffs_theta(4, 0.5, 1.0, t, th)
    outside = coeffs_theta(4, 1.5, 1.0, t, th)
    assert inside[2] == pytest.approx(0.6 * 0.4 * t)
    assert outside[2] == pytest.approx(-0.6 * 0.4 * t)
    assert inside[0] == 0 and inside[1] == 0


def test_coeffs_beta_table():
    b = BetaParams(0.0, 0.0, 1.7, 1.0, a_shift=0.0)
    assert np.allclose(coeffs_beta(1, 0.3, b), (1, 0, 0))
    for j in (2, 3, 4):
        assert np.allclose(coeffs_beta(j, 0.3, b), 0)
    b = BetaParams(0.3, 0.6, 1.1, 1.0, a_shift=0.0)
    c1 = coeffs_beta(1, 1.5, b)
    assert np.allclose(c1, (1, (0.3 + 0.6) * 1.1, 0.3 * 0.6 * 1.1**2))
    assert np.allclose(coeffs_beta(1, -2.0, b), c1)


def test_coeffs_beta_matches_factored_form_above_strip():
    # factored form of c_2 with both indicators equal to one (y > z)
    rng = np.random.default_rng(3)
    for _ in range(5):
        mu = rng.uniform(0.5, 2.0)
        b = BetaParams(0.3, -0.2, mu, 1.0, a_shift=1.0)
        w = rng.uniform(-1, 1)
        c = coeffs_beta(2, 1.5, b)
        shifted = c[0] * w**2 + c[1] * w + c[2]
        v = b.a_shift + w
        s0 = sz = 1.0
        direct = s0 * (0.3 * v - s0 * 0.3 * mu) * (v - sz * -0.2 * mu)
        assert shifted == pytest.approx(direct, rel=1e-12)


def test_bound_C_values():
    assert bound_C(ThetaParams(0, 0, 1.0), 0.55) == 1.0
    assert bound_C(ThetaParams(1, 1, 1.0), 1.0) == pytest.approx(4 + 2 * mills_ratio(1.0), rel=1e-12)
    assert mills_ratio(1.0) == pytest.approx(0.65568, abs=1e-5)
    assert np.isfinite(bound_C(ThetaParams(0.5, -0.5, 1.0), 0.55))


def test_zero_skew_gives_one():
    th = ThetaParams(0.0, 0.0, 1.0)
    X, Y = np.meshgrid(GRID, GRID)
    assert np.all(v_theta(0.55, X, Y, th).value == 1.0)
    assert np.all(v_bar(0.55, X, Y, th).value == 1.0)
    assert np.all(v_beta(0.4, X, Y, BetaParams(0.0, 0.0, 1.3, 1.0)).value == 1.0)
    assert np.allclose(transition_density_p(0.55, 0.5, np.array(GRID), th), gaussian_kernel(0.55, 0.5, np.array(GRID)))


def test_remainder_bound_arithmetic():
    th = ThetaParams(0.5, -0.5, 1.0)
    t = 0.55
    tv = v_theta(t, 0.5, 0.5, th, N=0)
    e = np.exp(-2 / t)
    assert e == pytest.approx(0.02635, abs=5e-6)
    assert tv.remainder_bound == pytest.approx(bound_C(th, t) / (1 - e) * e, rel=1e-12)


def test_v_bar_nmax_and_range():
    th = ThetaParams(0.5, -0.5, 1.0)
    t = 0.55
    N = next(n for n in range(10) if 2 * np.exp(-2 * (n + 1) / t) <= 1e-4)
    assert N == 2
    rng = np.random.default_rng(1)
    x, y = rng.uniform(-2, 3, (2, 1000))
    assert np.all(np.abs(v_bar(t, x, y, th).value) <= 1)


@pytest.mark.parametrize("theta", [(0.5, -0.5), (1.0, 0.5), (1.0, 1.0)])
@pytest.mark.parametrize("t", [0.2, 1.0])
def test_theta_series_matches_oracle(theta, t):
    th = ThetaParams(*theta, 1.0)
    for x in (-0.5, 0.5, 1.5):
        for y in (-0.5, 0.5, 1.5):
            tv = v_theta(t, x, y, th)
            assert abs(float(tv.value) - contour_oracle(t, x, y, th)) <= tv.remainder_bound + 1e-7


def test_beta_series_matches_oracle():
    b = BetaParams(0.5, -0.5, 1.5, 1.0)
    tv = v_beta(0.5, 0.5, 0.8, b)
    assert abs(float(tv.value) - contour_oracle(0.5, 0.5, 0.8, b)) <= tv.remainder_bound + 1e-7


def test_oracle_self_consistency_across_abscissas():
    a = contour_oracle(0.55, 0.5, 0.5, ThetaParams(0.5, -0.5, 1.0, a_shift=1.5))
    b = contour_oracle(0.55, 0.5, 0.5, ThetaParams(0.5, -0.5, 1.0, a_shift=3.0))
    assert a == pytest.approx(b, abs=1e-8)
    assert contour_oracle(0.4, 0.1, 0.9, BetaParams(0.0, 0.0, 0.8, 1.0)) == pytest.approx(1.0, abs=1e-9)


def test_oracle_time_scaling():
    # Brownian scaling: v(t, x, y; theta, z) = v(1, x/s, y/s; theta s, z/s) with s = sqrt(t)
    t = 0.36
    s = np.sqrt(t)
    a = contour_oracle(t, 0.2, 0.9, ThetaParams(0.5, -0.5, 1.0))
    b = contour_oracle(1.0, 0.2 / s, 0.9 / s, ThetaParams(0.5 * s, -0.5 * s, 1.0 / s))
    assert a == pytest.approx(b, abs=1e-9)


def test_beta_abscissa_independence():
    b0 = BetaParams(0.4, 0.3, 1.2, 1.0, a_shift=0.0)
    b1 = BetaParams(0.4, 0.3, 1.2, 1.0, a_shift=0.5)
    for y in (-0.5, 0.5, 1.5):
        u, v = v_beta(0.5, 0.25, y, b0), v_beta(0.5, 0.25, y, b1)
        assert abs(float(u.value) - float(v.value)) <= u.remainder_bound + v.remainder_bound + 1e-9


def test_small_mu_rejected():
    with pytest.raises(ValueError):
        v_beta(0.5, 0.0, 0.0, BetaParams(0.3, 0.3, 1e-8, 1.0))


def test_positivity():
    for th in [(0.5, -0.5), (1.0, 0.5)]:
        p = transition_density_p(0.3, 0.5, np.linspace(-3, 4, 200), ThetaParams(*th, 1.0))
        assert np.all(p > 0)


def test_bridge_density_reduces_to_brownian_bridge():
    y = np.linspace(-2, 3, 21)
    q = bridge_density_q(0.2, 0.55, 0.1, 0.7, y, ThetaParams(0.0, 0.0, 1.0))
    assert np.allclose(q, bridge_marginal(0.2, 0.55, 0.1, 0.7, y), rtol=1e-14)
    with pytest.raises(ValueError):
        bridge_density_q(0.6, 0.55, 0.1, 0.7, y, ThetaParams(0.5, -0.5, 1.0))


def test_bridge_density_against_oracle():
    th = ThetaParams(0.5, -0.5, 1.0)
    t, T, x1, x2 = 0.275, 0.55, 0.5, 0.5
    for y in (0.2, 0.8):
        ref = (bridge_marginal(t, T, x1, x2, y) * contour_oracle(t, x1, y, th) * contour_oracle(T - t, y, x2, th)
               / contour_oracle(T, x1, x2, th))
        assert bridge_density_q(t, T, x1, x2, y, th) == pytest.approx(ref, rel=1e-8)


def test_params_from_kappa_examples():
    b = params_from_kappa(drift_b1(), 2.0)
    assert (b.beta1, b.beta2, b.mu) == pytest.approx((0.5, -0.5, 1.5))
    for k in (1e3, 1e5):
        b = params_from_kappa(drift_b1(), k)
        assert b.beta2 * b.mu == pytest.approx(-0.5, rel=2e-3)
    # with the literal midpoint value b(1) = sin 1 the denominator differs from the quoted 1/17
    assert params_from_kappa(drift_b2(), 10, b_at_z2=0.5).beta2 == pytest.approx(1 / 17)
    with pytest.raises(ValueError):
        params_from_kappa(drift_b1(), 0.5)


def test_density_csv(tmp_path):
    path = tmp_path / "d.csv"
    ys = np.linspace(-1, 2, 7)
    write_density_csv(path, 0.55, 0.5, ys, ThetaParams(0.5, -0.5, 1.0))
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("t", "x", "y", "v", "p", "n_terms", "remainder_bound")
    assert np.array_equal(data["y"], ys)
    assert np.allclose(data["v"], v_theta(0.55, 0.5, ys, ThetaParams(0.5, -0.5, 1.0)).value, rtol=0, atol=0)
