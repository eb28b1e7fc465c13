"""Transition densities of skew Brownian motion with two barriers at 0 and z.

Two families are covered:

* the pre-limit ``(beta1, beta2)``-skew Brownian motion with constant drift
  ``mu`` (:class:`BetaParams`, :func:`v_beta`), and
* its small-skewness limit driven by the half jump heights
  ``(theta1, theta2)`` (:class:`ThetaParams`, :func:`v_theta`).

Both are evaluated from the same series over ``k`` (number of barrier
round trips) and ``j`` (four reflection geometries).  Each term is a
Gaussian transform of a rational function of the contour variable.  The
transform of ``v**n`` is a Hermite polynomial, and the transform of
``(v + A)**-m`` is a Gaussian moment ``M_{m-1}(x) / (m-1)!`` from
:func:`skewexact.special.gauss_exp_moments`.  All inputs are rescaled to
``t = 1`` first, so ``theta`` becomes ``theta * sqrt(t)``, ``z`` becomes
``z / sqrt(t)`` and so on.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from math import comb, lgamma
from typing import Optional, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad

from .special import (FACTORIAL, SQRT2PI, feynman_weights, gauss_exp_moments, hermite_table,
                      mills_ratio)

MU_MIN = 1e-6
N_CAP = 64
FEYNMAN_RADIUS = 0.5
_EXP_FLOOR = -740.0


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaParams:
    """Small-skewness limit parameters.

    ``a_shift`` is the contour abscissa; ``None`` selects
    ``max(0, -2 theta1, -2 theta2) + 1``.
    """

    theta1: float
    theta2: float
    z: float
    a_shift: Optional[float] = None

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("barrier gap z must be positive")
        lo = max(0.0, -2.0 * self.theta1, -2.0 * self.theta2)
        if self.a_shift is None:
            object.__setattr__(self, "a_shift", lo + 1.0)
        a = self.a_shift
        if a < 0 or a <= max(-2.0 * self.theta1, -2.0 * self.theta2):
            raise ValueError(f"a_shift={a} is not admissible (needs >= 0 and > max(-2 theta))")

    @property
    def product(self) -> float:
        return self.theta1 * self.theta2


@dataclass(frozen=True)
class BetaParams:
    """Skewness coefficients, drift and barrier gap of the pre-limit process."""

    beta1: float
    beta2: float
    mu: float
    z: float
    a_shift: Optional[float] = None

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("barrier gap z must be positive")
        if not (-1 < self.beta1 < 1 and -1 < self.beta2 < 1):
            raise ValueError("skewness coefficients must lie in (-1, 1)")
        lo = max(0.0, -2.0 * self.beta1 * self.mu, -2.0 * self.beta2 * self.mu)
        if self.a_shift is None:
            object.__setattr__(self, "a_shift", lo + 1.0)
        if self.a_shift < lo:
            raise ValueError(f"a_shift={self.a_shift} is not admissible (needs >= {lo})")


@dataclass
class TruncatedValue:
    """A truncated series value with its certified remainder bound.

    ``n_terms`` counts the ``k`` indices used (``N + 1``).
    """

    value: Union[float, np.ndarray]
    n_terms: int
    remainder_bound: float


Params = Union[ThetaParams, BetaParams]


# ---------------------------------------------------------------------------
# geometry and coefficients
# ---------------------------------------------------------------------------

def geometric_terms(x, y, z):
    """The four non-negative reflection lengths ``a_1..a_4`` of a pair ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.abs(y - x)
    a1 = np.zeros(np.broadcast(x, y).shape)
    a2 = np.abs(x) + np.abs(y) - d
    a3 = np.abs(x - z) + np.abs(y - z) - d
    a4 = 2.0 * np.maximum(z - np.maximum(np.maximum(x, y), 0.0), 0.0) \
        + 2.0 * np.maximum(np.minimum(np.minimum(x, y), z), 0.0)
    out = tuple(np.asarray(a, dtype=float) for a in (a1, a2, a3, a4))
    return tuple(a[()] if a.ndim == 0 else a for a in out)


def omega_jk(j: int, k: int, x, y, z, t):
    """``(a_j(x, y) + 2 z k + |y - x|) / sqrt(t)`` for ``j`` in ``1..4``."""
    a = geometric_terms(x, y, z)[j - 1]
    return (a + 2.0 * z * k + np.abs(np.asarray(y, float) - x)) / np.sqrt(t)


def _signs(y, z):
    """Rows ``1, s0, sz, s4`` with ``s0 = +-1{y>0}``, ``sz = +-1{y>z}``, ``s4 = 1 - 2*1{0<=y<z}``."""
    y = np.asarray(y, dtype=float)
    one = np.ones_like(y)
    s0 = np.where(y > 0, 1.0, -1.0)
    sz = np.where(y > z, 1.0, -1.0)
    s4 = np.where((y >= 0) & (y < z), -1.0, 1.0)
    return np.stack([one, s0, sz, s4])


def _theta_basis(j: int, T1: float, T2: float) -> np.ndarray:
    """Sign-basis coefficients (rows 1, s0, sz, s4) of c~_j(w), ascending in w."""
    B = np.zeros((4, 3))
    pr = T1 * T2
    if j == 1:
        B[0] = [pr, T1 + T2, 1.0]
    elif j == 2:
        B[0] = [0.0, -T1, 0.0]
        B[2] = [pr, 0.0, 0.0]
    elif j == 3:
        B[0] = [0.0, -T2, 0.0]
        B[1] = [-pr, 0.0, 0.0]
    else:
        B[3] = [-pr, 0.0, 0.0]
    return B


def _beta_basis(j: int, b1: float, b2: float, m: float) -> np.ndarray:
    """Sign-basis coefficients of c_j(y, m; w), ascending in w."""
    B = np.zeros((4, 3))
    bb = b1 * b2
    if j == 1:
        B[0] = [m * m * bb, m * (b1 + b2), 1.0]
    elif j == 2:
        B[0] = [0.0, -m * b1, 0.0]
        B[1] = [0.0, 0.0, b1]
        B[2] = [m * m * bb, 0.0, 0.0]
        B[3] = [0.0, -m * bb, 0.0]
    elif j == 3:
        B[0] = [0.0, -m * b2, 0.0]
        B[2] = [0.0, 0.0, b2]
        B[1] = [-m * m * bb, 0.0, 0.0]
        B[3] = [0.0, m * bb, 0.0]
    else:
        B[3] = [-m * m * bb, 0.0, bb]
    return B


def _shift_poly(c: np.ndarray, a: float) -> np.ndarray:
    """Coefficients in ``v`` of ``c(a + v)`` (ascending)."""
    out = np.zeros(len(c))
    for n, cn in enumerate(c):
        for i in range(n + 1):
            out[i] += cn * comb(n, i) * a ** (n - i)
    return out


def coeffs_theta(j: int, y: float, z: float, t: float, theta: ThetaParams):
    """Shifted coefficients ``(C~_{j,0}, C~_{j,1}, C~_{j,2})`` of the limit polynomial.

    ``C~_{j,0}`` multiplies ``w**2`` and ``C~_{j,2}`` is the constant term of
    ``c~_j(y; a sqrt(t) + w)``.
    """
    st = np.sqrt(t)
    row = _signs(float(y), z) @ _theta_basis(j, theta.theta1 * st, theta.theta2 * st)
    c = _shift_poly(row, theta.a_shift * st)
    return (c[2], c[1], c[0])


def coeffs_beta(j: int, y: float, beta: BetaParams):
    """Shifted coefficients ``(C_{j,0}, C_{j,1}, C_{j,2})`` of ``c_j(y, mu; a + w)``."""
    row = _signs(float(y), beta.z) @ _beta_basis(j, beta.beta1, beta.beta2, beta.mu)
    c = _shift_poly(row, beta.a_shift)
    return (c[2], c[1], c[0])


# ---------------------------------------------------------------------------
# the Gaussian transform of rational functions
# ---------------------------------------------------------------------------

class _Lin:
    """Linear combination of ``M_i(x1)``, ``M_i(x2)`` and ``He_i(omega')``.

    Coefficients are arrays over evaluation points.
    """

    def __init__(self):
        self.parts = {"a": {}, "b": {}, "g": {}}

    def add(self, kind, i, c):
        d = self.parts[kind]
        d[i] = d.get(i, 0.0) + c

    def table(self, kind, npts):
        d = self.parts[kind]
        if not d:
            return np.zeros((0, npts))
        out = np.zeros((max(d) + 1, npts))
        for i, c in d.items():
            out[i] += c
        return out


@lru_cache(maxsize=None)
def _feynman_length(p: int, q: int) -> int:
    return len(feynman_weights(p, q, FEYNMAN_RADIUS))


def _two_pole(lin: _Lin, p: int, q: int, A1, A2, c) -> None:
    """Add ``c * Lambda[(v+A1)^-p (v+A2)^-q]`` with ``p >= 1`` (array-valued poles)."""
    delta = A1 - A2
    if q == 0:
        lin.add("a", p - 1, c / FACTORIAL[p - 1])
        return
    if q < 0:
        qq = -q
        for s in range(qq + 1):
            cs = c * comb(qq, s) * (-delta) ** (qq - s)
            e = s - p
            if e < 0:
                lin.add("a", -e - 1, cs / FACTORIAL[-e - 1])
            else:
                for i in range(e + 1):
                    lin.add("g", i, cs * comb(e, i) * A1 ** (e - i))
        return
    near = np.abs(delta) <= FEYNMAN_RADIUS
    if np.any(near):
        # Taylor expansion of the first pole around the second one
        dn = np.where(near, delta, 0.0)
        cn = np.where(near, c, 0.0)
        for n in range(_feynman_length(p, q)):
            w = np.exp(lgamma(p + n) - lgamma(p) - lgamma(p + q + n) - lgamma(n + 1))
            lin.add("b", p + q - 1 + n, cn * w * (-dn) ** n)
    if not np.all(near):
        a, b = -A1, -A2
        ab = np.where(near, 1.0, a - b)
        cf = np.where(near, 0.0, c)
        for i in range(1, p + 1):
            lin.add("a", i - 1, cf * (-1) ** (p - i) * comb(p + q - i - 1, q - 1) / ab ** (p + q - i)
                    / FACTORIAL[i - 1])
        for i in range(1, q + 1):
            lin.add("b", i - 1, cf * (-1) ** (q - i) * comb(p + q - i - 1, p - 1) / (-ab) ** (p + q - i)
                    / FACTORIAL[i - 1])


def _rational_transform(poly: np.ndarray, K: int, A1, A2):
    """Coefficient tables of ``Lambda[poly(v) / ((v+A1)(v+A2))^K]``.

    ``poly`` has shape ``(deg + 1, npts)`` (ascending); ``A1``, ``A2`` have
    shape ``(npts,)``.  Returns ``(alpha, beta, gamma)`` tables multiplying
    ``M_i(omega + b1)``, ``M_i(omega + b2)`` and ``He_i(omega')``.
    """
    lin = _Lin()
    for m in range(poly.shape[0]):
        pm = poly[m]
        if not np.any(pm != 0.0):
            continue
        for r in range(m + 1):
            _two_pole(lin, K, K - r, A1, A2, pm * comb(m, r) * (-A2) ** (m - r))
    n = poly.shape[1]
    return lin.table("a", n), lin.table("b", n), lin.table("g", n)


@lru_cache(maxsize=8192)
def _rational_transform_scalar(poly: tuple, K: int, A1: float, A2: float):
    arr = np.array(poly, dtype=float)[:, None]
    return _rational_transform(arr, K, np.array([A1]), np.array([A2]))


# ---------------------------------------------------------------------------
# the series engine
# ---------------------------------------------------------------------------

def _shift_rows(B: np.ndarray, a) -> np.ndarray:
    """Shift every sign-basis row of ``B`` (shape ``(4, deg+1, npts)``) by ``a``."""
    out = np.zeros_like(B)
    deg = B.shape[1]
    for n in range(deg):
        for i in range(n + 1):
            out[:, i] += B[:, n] * comb(n, i) * a ** (n - i)
    return out


def _basis_table(params: Params, st, j: int, k: int) -> np.ndarray:
    """Sign-basis polynomial coefficients, shape ``(4, deg+1, npts)``."""
    if isinstance(params, ThetaParams):
        T1, T2 = params.theta1 * st, params.theta2 * st
        z = np.zeros_like(st)
        pr = T1 * T2
        B = np.zeros((4, 3) + st.shape)
        if j == 1:
            B[0] = [pr, T1 + T2, z + 1.0]
        elif j == 2:
            B[0, 1] = -T1
            B[2, 0] = pr
        elif j == 3:
            B[0, 1] = -T2
            B[1, 0] = -pr
        else:
            B[3, 0] = -pr
        return B
    ms = params.mu * st
    base = np.stack([_beta_basis(j, params.beta1, params.beta2, m) for m in ms], axis=-1)
    if k == 0:
        return base
    out = np.zeros((4, 3 + 2 * k) + st.shape)
    for i, m in enumerate(ms):
        fac = P.polypow([1.0, 0.0, -1.0 / m**2], k)
        for r in range(4):
            out[r, :, i] = np.convolve(base[r, :, i], fac)
    return out


def _poles(params: Params, st):
    if isinstance(params, ThetaParams):
        return params.theta1 * st, params.theta2 * st
    ms = params.mu * st
    return params.beta1 * ms, params.beta2 * ms


def series_terms(t, x, y, params: Params, N: int) -> np.ndarray:
    """Per-``k`` contributions of the density-ratio series.

    ``t``, ``x`` and ``y`` broadcast against each other.  Returns an array of
    shape ``(N + 1,) + broadcast_shape`` whose cumulative sum along axis 0
    gives the partial sums ``v_0 .. v_N``.
    """
    scalar_t = np.ndim(t) == 0
    shape = np.broadcast(np.asarray(t, float), np.asarray(x, float), np.asarray(y, float)).shape
    t, x, y = [np.broadcast_to(np.asarray(v, float), shape).ravel() for v in (t, x, y)]
    npts = x.size
    st = np.sqrt(t)
    xs, ys, zs = x / st, y / st, params.z / st
    As = params.a_shift * st
    b1, b2 = _poles(params, st)
    A1, A2 = As + b1, As + b2
    prod = b1 * b2
    d = np.abs(ys - xs)
    geo = geometric_terms(xs, ys, zs)
    sig = _signs(ys, zs)
    out = np.zeros((N + 1, npts))
    rep = slice(0, 1) if scalar_t else slice(None)
    for k in range(N + 1):
        if k > 0 and not np.any(prod != 0.0):
            break
        pref = prod**k
        for j in (4, 3, 2, 1):
            om = np.atleast_1d(geo[j - 1] + 2.0 * zs * k + d)
            expo = 0.5 * (d * d - om * om)
            live = expo > _EXP_FLOOR
            if not np.any(live):
                continue
            # coefficient tables: one column when t is shared, else per point
            Bt = _shift_rows(_basis_table(params, st[rep], j, k), As[rep])
            rows = [r for r in range(4) if np.any(Bt[r] != 0.0)]
            if not rows:
                continue
            if scalar_t:
                coefs = [_rational_transform_scalar(tuple(Bt[r][:, 0]), k + 1, float(A1[0]), float(A2[0]))
                         for r in rows]
            else:
                coefs = [_rational_transform(Bt[r][:, live], k + 1, A1[live], A2[live]) for r in rows]
            nA = max(c[0].shape[0] for c in coefs)
            nB = max(c[1].shape[0] for c in coefs)
            nG = max(c[2].shape[0] for c in coefs)
            o = om[live]
            MA = gauss_exp_moments(nA - 1, o + b1[live]) if nA else None
            MB = gauss_exp_moments(nB - 1, o + b2[live]) if nB else None
            HG = hermite_table(nG - 1, o - As[live]) if nG else None
            val = np.zeros(o.size)
            for r, (al, be, ga) in zip(rows, coefs):
                part = np.zeros(o.size)
                if al.shape[0]:
                    part += np.sum(al * MA[:al.shape[0]], axis=0)
                if be.shape[0]:
                    part += np.sum(be * MB[:be.shape[0]], axis=0)
                if ga.shape[0]:
                    part += np.sum(ga * HG[:ga.shape[0]], axis=0)
                val += sig[r][live] * part
            out[k, live] += pref[live] * np.exp(expo[live]) * val
    return out.reshape((N + 1,) + shape)


# ---------------------------------------------------------------------------
# bounds and public evaluators
# ---------------------------------------------------------------------------

def bound_C(theta: ThetaParams, t):
    """Uniform constant ``C`` with ``sup |v| <= C / (1 - exp(-2 z^2 / t))``.

    ``t`` may be an array.
    """
    th1, th2 = theta.theta1, theta.theta2
    st = np.sqrt(np.asarray(t, dtype=float))
    ph = mills_ratio
    if th1 == th2:
        out = 1.0 + 2.0 * st * abs(th1) * ph(th1 * st) + 3.0 * th1**2 * st**2
    else:
        def psi(a, b):
            head = abs(a) * st * ph(a * st) + abs(b) * st * ph(b * st)
            tail = (abs((a + b) / (a - b)) - 1.0) * abs(a) * st * ph(a * st) \
                + 2.0 * abs(a * b / (a - b)) * st * ph(b * st)
            return head + np.minimum(2.0, tail)

        cross = np.minimum(1.0, abs(th1 * th2 / (th1 - th2)) * st * np.abs(ph(th1 * st) - ph(th2 * st)))
        out = 1.0 + np.maximum(psi(th1, th2), psi(th2, th1)) + cross
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def _decay(z: float, t):
    out = np.exp(-2.0 * z * z / np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def _remainder(C: float, z: float, t: float, N: int, prod: float) -> float:
    if prod == 0.0:
        return 0.0
    q = _decay(z, t)
    return C / (1.0 - q) * q ** (N + 1)


def _choose_N(C, z, t, prod, tol, n_cap):
    if prod == 0.0:
        return 0
    for N in range(n_cap + 1):
        if _remainder(C, z, t, N, prod) <= tol:
            return N
    return n_cap


def _pack(vals):
    v = np.asarray(vals)
    return v[()] if v.ndim == 0 else v


def v_theta(t: float, x, y, theta: ThetaParams, tol: float = 1e-10, n_cap: int = N_CAP,
            N: Optional[int] = None) -> TruncatedValue:
    """Density ratio ``v^(theta1, theta2)(t, x, y)`` of the limit measure.

    The truncation index is the smallest ``N`` whose certified remainder is
    at most ``tol`` (capped at ``n_cap``) unless ``N`` is given explicitly.
    Coordinates are relative to the barriers ``0`` and ``theta.z``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    C = bound_C(theta, t)
    if N is None:
        N = _choose_N(C, theta.z, t, theta.product, tol, n_cap)
    terms = series_terms(t, x, y, theta, N)
    return TruncatedValue(_pack(terms.sum(axis=0)), N + 1, _remainder(C, theta.z, t, N, theta.product))


BETA_BOUND_C = 3.0


def v_beta(t: float, x, y, beta: BetaParams, tol: float = 1e-10, n_cap: int = N_CAP,
           N: Optional[int] = None) -> TruncatedValue:
    """Density ratio of the ``(beta1, beta2)``-skew motion to drifted Brownian motion.

    Raises
    ------
    ValueError
        If ``|mu|`` is below ``1e-6``; use :func:`contour_oracle` there.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if abs(beta.mu) < MU_MIN:
        raise ValueError("|mu| below 1e-6: evaluate through contour_oracle instead")
    prod = beta.beta1 * beta.beta2
    if N is None:
        N = _choose_N(BETA_BOUND_C, beta.z, t, prod, tol, n_cap)
    terms = series_terms(t, x, y, beta, N)
    return TruncatedValue(_pack(terms.sum(axis=0)), N + 1, _remainder(BETA_BOUND_C, beta.z, t, N, prod))


def renormalisation(theta: ThetaParams, t):
    """Factor turning ``v`` into the ``[0, 1]``-valued ``v_bar`` (``t`` may be an array)."""
    factor = 1.0 - _decay(theta.z, t) if theta.product != 0.0 else 1.0
    return factor / bound_C(theta, t)


def bar_remainder(theta: ThetaParams, t, N: int):
    """Remainder bound ``exp(-2 z^2 (N+1) / t)`` of the renormalised series."""
    if theta.product == 0.0:
        return 0.0 * _decay(theta.z, t)
    return _decay(theta.z, t) ** (N + 1)


def v_bar(t: float, x, y, theta: ThetaParams, tol: float = 1e-10, n_cap: int = N_CAP,
          N: Optional[int] = None) -> TruncatedValue:
    """Renormalised ratio ``(1 - exp(-2 z^2/t)) v / C`` with remainder ``exp(-2 z^2 (N+1)/t)``."""
    if N is None:
        N = 0
        while N < n_cap and np.max(bar_remainder(theta, t, N)) > tol:
            N += 1
    terms = series_terms(t, x, y, theta, N)
    return TruncatedValue(_pack(terms.sum(axis=0) * renormalisation(theta, t)), N + 1,
                          bar_remainder(theta, t, N))


def gaussian_kernel(t: float, x, y, mu: float = 0.0):
    """Density of ``N(x + mu t, t)`` at ``y``."""
    y = np.asarray(y, dtype=float)
    return np.exp(-0.5 * (y - x - mu * t) ** 2 / t) / np.sqrt(2.0 * np.pi * t)


def transition_density_p(t: float, x, y, params: Params, tol: float = 1e-12):
    """Gaussian kernel times the density ratio (driftless kernel in theta-mode)."""
    if isinstance(params, ThetaParams):
        return gaussian_kernel(t, x, y) * v_theta(t, x, y, params, tol=tol).value
    return gaussian_kernel(t, x, y, params.mu) * v_beta(t, x, y, params, tol=tol).value


def bridge_marginal(t: float, T: float, x1, x2, y):
    """Brownian-bridge marginal density at time ``t`` of a bridge from ``x1`` to ``x2`` on ``[0, T]``."""
    m = x1 + t / T * (np.asarray(x2, float) - x1)
    return gaussian_kernel(t * (T - t) / T, m, y)


def bridge_density_q(t: float, T: float, x1: float, x2: float, y, theta: ThetaParams, tol: float = 1e-12):
    """Marginal at time ``t`` of the limit-measure bridge from ``(0, x1)`` to ``(T, x2)``."""
    if not 0 < t < T:
        raise ValueError("need 0 < t < T")
    den = float(v_theta(T, x1, x2, theta, tol=tol).value)
    if abs(den) < 1e-12:
        raise ValueError("end-to-end density ratio is numerically zero")
    num = v_theta(t, x1, y, theta, tol=tol).value * v_theta(T - t, y, x2, theta, tol=tol).value
    return bridge_marginal(t, T, x1, x2, y) * num / den


def params_from_kappa(spec, kappa: float, b_at_z1: Optional[float] = None,
                      b_at_z2: Optional[float] = None) -> BetaParams:
    """Pre-limit parameters ``beta1 = 1/kappa``, ``beta2(kappa)``, ``mu(kappa)`` for a drift.

    ``b_at_z1`` and ``b_at_z2`` override the drift's midpoint values.
    """
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if spec.theta1 == 0.0:
        raise ValueError("theta1 must be non-zero")
    bz1 = spec.b_at_z1 if b_at_z1 is None else b_at_z1
    bz2 = spec.b_at_z2 if b_at_z2 is None else b_at_z2
    den = kappa * spec.theta1 + bz1 - bz2
    if den == 0.0:
        raise ValueError("beta2 denominator vanishes")
    beta2 = spec.theta2 / den
    if abs(beta2) >= 1:
        raise ValueError(f"|beta2| = {abs(beta2)} >= 1; increase kappa")
    return BetaParams(1.0 / kappa, beta2, bz1 + kappa * spec.theta1, spec.z)


# ---------------------------------------------------------------------------
# contour-integral oracle
# ---------------------------------------------------------------------------

def contour_oracle(t: float, x: float, y: float, params: Params) -> float:
    """Density ratio by direct quadrature of the vertical-line contour integral.

    The line ``Re w = a`` is placed at ``max(a_shift sqrt(t), omega_j, 0.05)`` for
    each geometry ``j`` so that the Gaussian factor peaks on the real axis.
    The imaginary range is cut at ``U = 12 + 2 max(omega_1, |mu| sqrt(t), a sqrt(t))``
    and doubled until two evaluations agree to ``1e-10``.
    """
    st = np.sqrt(t)
    xs, ys, zs = x / st, y / st, params.z / st
    d = abs(ys - xs)
    geo = [float(g) for g in geometric_terms(xs, ys, zs)]
    sig = _signs(float(ys), zs)
    if isinstance(params, ThetaParams):
        T1, T2 = params.theta1 * st, params.theta2 * st
        bases = [_theta_basis(j, T1, T2) for j in (1, 2, 3, 4)]
        scale_mu = 0.0

        def denom(w):
            return (w + T1) * (w + T2) - T1 * T2 * np.exp(-2.0 * w * zs)
    else:
        ms = params.mu * st
        b1, b2 = params.beta1, params.beta2
        bases = [_beta_basis(j, b1, b2, ms) for j in (1, 2, 3, 4)]
        scale_mu = abs(ms)

        def denom(w):
            return b1 * b2 * np.exp(-2.0 * w * zs) * (w * w - ms * ms) + (w + b1 * ms) * (w + b2 * ms)

    a_s = params.a_shift * st
    total = 0.0
    for j in range(4):
        c = sig @ bases[j]
        om = geo[j] + d
        a = max(a_s, om, 0.05)

        def f(u, a=a, om=om, c=c):
            w = a + 1j * u
            val = np.exp(0.5 * d * d + 0.5 * w * w - w * om) * (c[0] + c[1] * w + c[2] * w * w) / denom(w)
            return val.real

        U = 12.0 + 2.0 * max(geo[0] + d, scale_mu, a_s, a)
        prev = quad(f, 0.0, U, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
        for _ in range(4):
            U *= 2.0
            cur = quad(f, 0.0, U, limit=800, epsabs=1e-14, epsrel=1e-12)[0]
            if abs(cur - prev) <= 1e-10:
                break
            prev = cur
        else:
            raise RuntimeError("contour quadrature did not converge")
        total += 2.0 * cur / SQRT2PI
    return total


# ---------------------------------------------------------------------------
# CSV dump
# ---------------------------------------------------------------------------

def write_density_csv(path, t: float, x: float, ys, params: Params, tol: float = 1e-10) -> None:
    """Write ``t, x, y, v, p, n_terms, remainder_bound`` rows for a grid of ``y``."""
    ys = np.asarray(ys, dtype=float)
    if isinstance(params, ThetaParams):
        tv = v_theta(t, x, ys, params, tol=tol)
        p = gaussian_kernel(t, x, ys) * tv.value
    else:
        tv = v_beta(t, x, ys, params, tol=tol)
        p = gaussian_kernel(t, x, ys, params.mu) * tv.value
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "v", "p", "n_terms", "remainder_bound"])
        for yi, vi, pi in zip(ys, np.atleast_1d(tv.value), np.atleast_1d(p)):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(yi)), repr(float(vi)), repr(float(pi)),
                        tv.n_terms, repr(float(tv.remainder_bound))])
