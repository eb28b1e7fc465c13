"""Acceptance criteria, one verdict line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the
terminal summary) or ``python tests/test_acceptance.py`` (lines printed as
they complete).  Reference values come from published figures quoted in the
criteria or from the independent oracles in ``tests/oracles.py``.
"""
import os
import sys
import time

import numpy as np
import pytest
from scipy import integrate, stats

sys.path.insert(0, os.path.dirname(__file__))
import oracles  # noqa: E402

from skewexact.analysis import benchmark  # noqa: E402
from skewexact.density import (BetaParams, ThetaParams, bridge_density_q, geometric_terms, params_from_kappa,  # noqa: E402
                               transition_density_p, v_beta, v_theta)
from skewexact.drift import drift_b1, drift_constant  # noqa: E402
from skewexact.grs import GrsDiagnostics, grs_batch, make_h_target  # noqa: E402
from skewexact.sim import SimConfig, euler_maruyama, simulate, spawn_streams  # noqa: E402
from skewexact.special import fourier_kernel_f  # noqa: E402

GRID = [-0.5, 0.25, 0.5, 0.75, 1.5]
THETAS = [(0.5, -0.5), (1.0, 0.5), (1.0, 1.0)]
TIMES = [0.2, 0.55, 1.0]
BETAS = [(0.5, -0.5, 1.5), (0.3, 0.4, -0.8), (-0.25, 0.5, 2.0)]


def _line(n, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] C{n:<2d} {title}: {detail}"


def _gl(f, a, b, breaks=(), n_panels=200, order=20):
    """Composite Gauss-Legendre quadrature, panels split at the given kinks."""
    pts = sorted({a, b, *[p for p in breaks if a < p < b]})
    x0, w0 = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        k = max(1, int(n_panels * (hi - lo) / (b - a)))
        e = np.linspace(lo, hi, k + 1)
        mid, half = 0.5 * (e[1:] + e[:-1]), 0.5 * np.diff(e)
        xs = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
        ws = (half[:, None] * w0[None, :]).ravel()
        total += float(np.dot(ws, f(xs)))
    return total


# ---------------------------------------------------------------------------

def check_1():
    got = [tuple(float(v) for v in geometric_terms(*p, 1.0)) for p in [(-1, 2), (-1, 0.5), (-2, -1)]]
    want = [(0, 0, 0, 0), (0, 0, 1, 1), (0, 2, 4, 2)]
    return got == want, f"cases i-iii -> {got}"


def check_2():
    worst_t = worst_b = -np.inf
    for th in THETAS:
        prm = ThetaParams(*th, 1.0)
        for t in TIMES:
            for x in GRID:
                for y in GRID:
                    tv = v_theta(t, x, y, prm)
                    ref = oracles.density_ratio(t, x, y, 1.0, theta=th)
                    worst_t = max(worst_t, abs(float(tv.value) - ref) - tv.remainder_bound)
    for b in BETAS:
        prm = BetaParams(*b, 1.0)
        for t in TIMES:
            for x in GRID:
                for y in GRID:
                    tv = v_beta(t, x, y, prm)
                    ref = oracles.density_ratio(t, x, y, 1.0, beta=b)
                    worst_b = max(worst_b, abs(float(tv.value) - ref) - tv.remainder_bound)
    ok = worst_t <= 1e-7 and worst_b <= 1e-7
    return ok, f"max(|series - oracle| - bound): theta {worst_t:.1e}, beta {worst_b:.1e} (limit 1e-7)"


def check_3():
    worst = 0.0
    masses = []
    for th in [(0.5, -0.5), (1.0, 0.5)]:
        prm = ThetaParams(*th, 1.0)
        for t in (0.2, 0.55):
            for x in (-0.5, 0.5, 1.5):
                w = 12 * np.sqrt(t)
                m = _gl(lambda y: transition_density_p(t, x, y, prm), x - w, x + w, (0.0, 1.0))
                masses.append(m)
                worst = max(worst, abs(m - 1))
    thq = ThetaParams(0.5, -0.5, 1.0)
    mq = _gl(lambda y: bridge_density_q(0.2, 0.55, 0.5, 0.5, y, thq), -5, 6, (0.0, 1.0))
    # control: the pre-limit kernel with the same quadrature
    mb = _gl(lambda y: transition_density_p(0.55, 0.5, y, BetaParams(0.5, -0.5, 1.5, 1.0)), -12, 13, (0.0, 1.0))
    ok = worst <= 1e-5 and abs(mq - 1) <= 1e-5
    return ok, (f"theta-kernel masses in [{min(masses):.4f}, {max(masses):.4f}] (need 1 +- 1e-5); "
                f"bridge {mq:.8f}; pre-limit control {mb:.10f}")


def check_4():
    prm = ThetaParams(0.5, -0.5, 1.0)
    t, s, x = 0.3, 0.25, 0.5
    worst = 0.0
    for w in (-0.5, 0.5, 1.5):
        lhs = _gl(lambda y: transition_density_p(t, x, y, prm) * transition_density_p(s, y, w, prm), -8, 9, (0.0, 1.0))
        rhs = float(transition_density_p(t + s, x, w, prm))
        worst = max(worst, abs(lhs - rhs))
    return worst <= 2e-4, f"max composition error {worst:.2e} (limit 2e-4)"


def check_5():
    worst = -np.inf
    X, Y = np.meshgrid(GRID, GRID)
    for th in THETAS:
        lo = max(0.0, -2 * th[0], -2 * th[1])
        a, b = v_theta(0.55, X, Y, ThetaParams(*th, 1.0, lo + 0.25)), v_theta(0.55, X, Y, ThetaParams(*th, 1.0, lo + 3.0))
        worst = max(worst, float(np.max(np.abs(a.value - b.value) - a.remainder_bound - b.remainder_bound)))
    return worst <= 1e-9, f"max excess over summed bounds {worst:.1e} (limit 1e-9), 25 points x 3 theta"


def check_6():
    worst = -np.inf
    X, Y = np.meshgrid(GRID, GRID)
    for th in THETAS:
        prm = ThetaParams(*th, 1.0)
        for t in TIMES:
            ref = v_theta(t, X, Y, prm, N=40).value
            for N in range(6):
                tv = v_theta(t, X, Y, prm, N=N)
                worst = max(worst, float(np.max(np.abs(tv.value - ref) - tv.remainder_bound)))
    return worst <= 0, f"max(|v_N - v_40| - bound_N) = {worst:.1e} (must be <= 0)"


def check_7():
    worst = 0.0
    for a1, a2 in [(1.0, 2.0), (0.5, 3.0)]:
        for k in range(1, 6):
            val = integrate.quad(lambda w: abs(fourier_kernel_f(k, w, a1, a2)), -np.inf, 0, epsabs=1e-14, limit=500)[0]
            worst = max(worst, abs(val - np.sqrt(2 * np.pi) / (a1 * a2) ** k))
    return worst <= 1e-8, f"max |L1 - sqrt(2 pi)/(a1 a2)^k| = {worst:.1e} (limit 1e-8)"


def _h_rates(draws, seed, tighten):
    spec = drift_b1()
    tg = make_h_target(spec, None, np.full(draws, 0.5), 0.55, 0.75, tighten=tighten)
    return GrsDiagnostics.from_batch(grs_batch(tg, spawn_streams(seed, draws)))


def check_8():
    # about 10^4 proposals: 1700 accepted endpoints
    tight = _h_rates(1700, 80, True)
    ceil = _h_rates(1700, 81, False)
    sk = simulate(drift_b1(), 0.5, SimConfig(T=1.0, T_el=0.55, delta=0.75, seed=82), 2000)
    bridge = sum(s.bridge_proposals for s in sk) / sum(s.bridge_draws for s in sk)
    ok = (abs(tight.acceptance_rate - 0.196) <= 0.03 and abs(tight.mean_proposals - 5) <= 1
          and abs(bridge - 2) <= 1)
    return ok, (f"endpoint acceptance {tight.acceptance_rate:.3f} (target 0.196 +- 0.03; sup-norm M_B gives "
                f"{ceil.acceptance_rate:.3f}), proposals/endpoint {tight.mean_proposals:.2f} (5 +- 1), "
                f"proposals/bridge {bridge:.2f} (2 +- 1)")


def check_9(runs=5, n=10000):
    spec = drift_b1()
    ps = []
    for r in range(runs):
        cfg = SimConfig(T=1.0, T_el=0.55, delta=0.75, seed=900 + r)
        exact = [s.terminal for s in simulate(spec, 0.5, cfg, n)]
        euler = euler_maruyama(spec, 0.5, 1.0, 1e-4, np.random.default_rng(950 + r), n=n)
        ps.append(stats.ks_2samp(exact, euler).pvalue)
    good = sum(p > 0.01 for p in ps)
    return good >= 4, f"KS p-values {[round(float(p), 3) for p in ps]}, {good}/5 above 0.01 (need 4)"


def check_10(runs=5, n=10000):
    spec = drift_constant(0.7)
    ps = []
    for r in range(runs):
        vals = [s.terminal for s in simulate(spec, 0.5, SimConfig(T=1.0, seed=1000 + r), n)]
        ps.append(stats.kstest(vals, stats.norm(1.2, 1.0).cdf).pvalue)
    good = sum(p > 0.01 for p in ps)
    return good >= 4, f"KS p-values {[round(float(p), 3) for p in ps]}, {good}/5 above 0.01 (need 4)"


def check_11():
    spec = drift_b1()
    th = ThetaParams(spec.theta1, spec.theta2, spec.z)
    errs = []
    for kappa in (10, 100, 1000):
        b = params_from_kappa(spec, kappa)
        e = 0.0
        for t in (0.2, 0.55):
            for x in GRID:
                for y in GRID:
                    e = max(e, abs(float(v_beta(t, x, y, b).value) - float(v_theta(t, x, y, th).value)))
        errs.append(e)
    ok = errs[0] > errs[1] > errs[2] and errs[2] <= 1e-2
    return ok, f"grid errors at kappa 10, 100, 1000: {[f'{e:.2e}' for e in errs]}"


def check_12(draws=100000):
    d = _h_rates(draws, 120, True)
    rate = d.inexact / draws
    return rate <= 2e-4, f"{d.inexact} inexact of {draws} draws = {rate:.1e} (limit 2e-4)"


def check_13():
    spec = drift_b1()
    cfg = SimConfig(T_el=0.55, delta=0.75)
    s_rows = benchmark(spec, "srrs", [1.0, 2.0, 4.0], 300, cfg, repeats=2, seed=130)
    r_rows = benchmark(spec, "rrs", [1.0, 4.0], 60, cfg, repeats=2, seed=131)
    ratio = np.array([r[4] for r in s_rows])
    cv = float(ratio.std() / ratio.mean())
    r1, r4 = r_rows[0][4], r_rows[1][4]
    ok = cv < 0.5 and r4 > 2 * r1
    return ok, f"srrs time/T CV {cv:.2f} (< 0.5); rrs time/T at T=4 is {r4 / r1:.1f}x that at T=1 (> 2)"


CRITERIA = [
    (1, "geometry table", check_1),
    (2, "series vs contour oracle", check_2),
    (3, "normalization", check_3),
    (4, "Chapman-Kolmogorov", check_4),
    (5, "abscissa invariance", check_5),
    (6, "certified truncation", check_6),
    (7, "kernel L1 identities", check_7),
    (8, "rejection rates on b1", check_8),
    (9, "SRRS vs fine Euler law", check_9),
    (10, "constant drift law", check_10),
    (11, "small-skew convergence", check_11),
    (12, "inexact-decision rate", check_12),
    (13, "CPU-time shape", check_13),
]


@pytest.mark.parametrize("n,title,check", CRITERIA, ids=[f"C{c[0]}-{c[1].replace(' ', '_')}" for c in CRITERIA])
def test_criterion(n, title, check, record):
    t0 = time.perf_counter()
    ok, detail = check()
    record(_line(n, title, ok, detail) + f" [{time.perf_counter() - t0:.1f}s]")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, title, check in CRITERIA:
        t0 = time.perf_counter()
        ok, detail = check()
        failed += not ok
        print(_line(n, title, ok, detail) + f" [{time.perf_counter() - t0:.1f}s]", flush=True)
    sys.exit(1 if failed else 0)
