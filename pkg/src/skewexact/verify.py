"""Self-check suites behind ``skewexact verify``.

Each suite returns a list of :class:`Check` records.  The suites mirror
the numerical properties the library promises: oracle agreement, mass,
semigroup composition, truncation bounds, kernel norms, sampler soundness
and the constant-drift law.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
from scipy import stats

from .density import (BetaParams, ThetaParams, bridge_density_q, contour_oracle, gaussian_kernel,
                      transition_density_p, v_beta, v_theta)
from .special import SQRT2PI, fourier_kernel_f


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


THETA_SETS = [(0.5, -0.5), (1.0, 0.5), (1.0, 1.0)]
TIMES = [0.2, 0.55, 1.0]
BETA_SETS = [(0.5, -0.5, 1.5), (0.3, 0.4, -0.8), (-0.25, 0.5, 2.0)]
GRID = [-0.5, 0.25, 0.5, 0.75, 1.5]


def gauss_legendre(f: Callable, breaks, order: int = 40, per_unit: int = 4) -> float:
    """Composite Gauss-Legendre rule over consecutive breakpoints.

    ``f`` receives a flat array of nodes and must return values of the same shape.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    breaks = np.asarray(breaks, dtype=float)
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(np.ceil((b - a) * per_unit)))
        edges = np.linspace(a, b, k + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            xs.append(0.5 * (hi - lo) * nodes + 0.5 * (hi + lo))
            ws.append(0.5 * (hi - lo) * weights)
    x = np.concatenate(xs)
    return float(np.dot(np.concatenate(ws), f(x)))


def _breaks(center: float, width: float, z: float):
    pts = {center - width, center + width}
    pts.update(p for p in (0.0, z) if center - width < p < center + width)
    return sorted(pts)


def suite_oracle(tol: float = 1e-7) -> List[Check]:
    out = []
    worst = 0.0
    for th in THETA_SETS:
        prm = ThetaParams(th[0], th[1], 1.0)
        for t in TIMES:
            for x in GRID:
                for y in GRID:
                    tv = v_theta(t, x, y, prm)
                    err = abs(float(tv.value) - contour_oracle(t, x, y, prm)) - tv.remainder_bound
                    worst = max(worst, err)
    out.append(Check("theta series vs contour integral", worst <= tol, f"max excess {worst:.2e} <= {tol:g}"))
    worst = 0.0
    for b1, b2, mu in BETA_SETS:
        prm = BetaParams(b1, b2, mu, 1.0)
        for t in (0.2, 0.5, 1.0):
            for x in GRID:
                for y in GRID:
                    tv = v_beta(t, x, y, prm)
                    err = abs(float(tv.value) - contour_oracle(t, x, y, prm)) - tv.remainder_bound
                    worst = max(worst, err)
    out.append(Check("beta series vs contour integral", worst <= tol, f"max excess {worst:.2e} <= {tol:g}"))
    return out


def suite_normalization(tol: float = 1e-5) -> List[Check]:
    out = []
    for th in [(0.5, -0.5), (1.0, 0.5)]:
        prm = ThetaParams(th[0], th[1], 1.0)
        for t in (0.2, 0.55):
            for x in (-0.5, 0.5, 1.5):
                w = 14 * np.sqrt(t)
                mass = gauss_legendre(lambda y: transition_density_p(t, x, y, prm), _breaks(x, w, 1.0))
                out.append(Check(f"mass of p theta={th} t={t} x={x}", abs(mass - 1) <= tol,
                                 f"|{mass:.8f} - 1| <= {tol:g}"))
    for b1, b2, mu in BETA_SETS[:2]:
        prm = BetaParams(b1, b2, mu, 1.0)
        mass = gauss_legendre(lambda y: transition_density_p(0.55, 0.5, y, prm), _breaks(0.5, 14.0, 1.0))
        out.append(Check(f"mass of p beta=({b1},{b2}) mu={mu}", abs(mass - 1) <= tol, f"|{mass:.8f} - 1| <= {tol:g}"))
    prm = ThetaParams(0.5, -0.5, 1.0)
    mass = gauss_legendre(lambda y: bridge_density_q(0.2, 0.55, 0.5, 0.5, y, prm), _breaks(0.5, 6.0, 1.0))
    out.append(Check("mass of bridge density", abs(mass - 1) <= tol, f"|{mass:.8f} - 1| <= {tol:g}"))
    return out


def suite_ck(tol: float = 2e-4) -> List[Check]:
    out = []
    prm = ThetaParams(0.5, -0.5, 1.0)
    t, s, x = 0.3, 0.25, 0.5
    for w in (-0.5, 0.5, 1.5):
        lhs = gauss_legendre(lambda y: transition_density_p(t, x, y, prm) * transition_density_p(s, y, w, prm),
                             _breaks(0.5 * (x + w), 8.0, 1.0))
        rhs = float(transition_density_p(t + s, x, w, prm))
        out.append(Check(f"composition at w={w}", abs(lhs - rhs) <= tol, f"|{lhs:.6f} - {rhs:.6f}| <= {tol:g}"))
    return out


def suite_truncation() -> List[Check]:
    worst = -np.inf
    for th in THETA_SETS:
        prm = ThetaParams(th[0], th[1], 1.0)
        for t in TIMES:
            X, Y = np.meshgrid(GRID, GRID)
            ref = v_theta(t, X, Y, prm, N=40).value
            for N in range(6):
                tv = v_theta(t, X, Y, prm, N=N)
                worst = max(worst, float(np.max(np.abs(tv.value - ref) - tv.remainder_bound)))
    return [Check("certified truncation N=0..5", worst <= 0.0, f"max(error - bound) = {worst:.2e} <= 0")]


def suite_a_invariance(tol: float = 1e-9) -> List[Check]:
    worst = -np.inf
    for th in THETA_SETS:
        lo = max(0.0, -2 * th[0], -2 * th[1])
        p1 = ThetaParams(th[0], th[1], 1.0, lo + 0.5)
        p2 = ThetaParams(th[0], th[1], 1.0, lo + 2.0)
        X, Y = np.meshgrid(GRID, GRID)
        a, b = v_theta(0.55, X, Y, p1), v_theta(0.55, X, Y, p2)
        worst = max(worst, float(np.max(np.abs(a.value - b.value) - a.remainder_bound - b.remainder_bound)))
    return [Check("contour abscissa invariance", worst <= tol, f"max excess {worst:.2e} <= {tol:g}")]


def suite_l1(tol: float = 1e-8) -> List[Check]:
    out = []
    for a1, a2 in [(1.0, 2.0), (0.5, 3.0)]:
        for k in range(1, 6):
            lo = -60.0 / min(a1, a2)
            val = gauss_legendre(lambda w: np.abs(fourier_kernel_f(k, w, a1, a2)), [lo, 0.0], order=60,
                                 per_unit=2)
            ref = SQRT2PI / (a1 * a2) ** k
            out.append(Check(f"L1 norm k={k} a=({a1},{a2})", abs(val - ref) <= tol, f"|{val - ref:.2e}| <= {tol:g}"))
    return out


def suite_grs(draws: int = 20000) -> List[Check]:
    from .drift import drift_b1
    from .grs import GrsDiagnostics, grs_batch, make_h_target, theta_from_drift
    spec = drift_b1()
    tg = make_h_target(spec, theta_from_drift(spec), np.full(draws, 0.5), 0.55, 0.75)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(11).spawn(draws)]
    d = GrsDiagnostics.from_batch(grs_batch(tg, rngs))
    rate = d.inexact / draws
    ys = np.linspace(-4, 5, 2001)
    f = tg.partial_sum(int(tg.n_max[0]), ys, np.zeros(ys.size, dtype=int))
    r = tg.remainder[0, tg.n_max[0]]
    return [Check("inexact decision rate", rate <= 2e-4, f"{rate:.2e} <= 2e-4"),
            Check("partial sums inside the band", bool(np.all((f >= -r) & (f <= 1 + r))),
                  f"f_N in [{f.min():.4f}, {f.max():.4f}]"),
            Check("mean terms per decision", d.mean_terms <= 2, f"{d.mean_terms:.3f} <= 2")]


def suite_sim(n: int = 4000) -> List[Check]:
    from .drift import drift_constant
    from .sim import SimConfig, simulate
    spec = drift_constant(0.7)
    cfg = SimConfig(T=1.0, T_el=0.55, delta=0.75, seed=3)
    vals = np.array([s.terminal for s in simulate(spec, 0.5, cfg, n)])
    p = stats.kstest(vals, stats.norm(1.2, 1.0).cdf).pvalue
    return [Check("constant-drift terminal law", p > 0.01, f"KS p = {p:.3f} > 0.01")]


SUITES: Dict[str, Callable[[], List[Check]]] = {
    "oracle": suite_oracle,
    "normalization": suite_normalization,
    "ck": suite_ck,
    "truncation": suite_truncation,
    "a-invariance": suite_a_invariance,
    "l1": suite_l1,
    "grs": suite_grs,
    "sim": suite_sim,
}


def run(names=None, tol: float = None) -> List[Check]:
    """Run the named suites (all by default); ``tol`` overrides the oracle tolerance."""
    names = list(SUITES) if not names or names == ["all"] else names
    out = []
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown suite {n!r}; choose from {', '.join(SUITES)}")
        out.extend(SUITES[n](tol) if (n == "oracle" and tol is not None) else SUITES[n]())
    return out
