"""Special functions behind the skew density series.

Everything here is real-valued and vectorised over numpy arrays.  The
Gaussian tail is always handled through the scaled complementary error
function so that products such as ``exp(x**2/2) * Phi^c(x)`` never overflow.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb, factorial, lgamma, exp

import numpy as np
from scipy.special import erfc, erfcx

SQRT2 = np.sqrt(2.0)
SQRT2PI = np.sqrt(2.0 * np.pi)
TABLE_SIZE = 256

FACTORIAL = np.array([float(factorial(n)) for n in range(171)] + [np.inf] * (TABLE_SIZE + 1 - 171))
# double factorials n!! for n = -1..TABLE_SIZE, stored with offset 1
_DFACT = [1.0, 1.0, 1.0]
for _n in range(2, TABLE_SIZE + 1):
    _DFACT.append(_DFACT[-2] * _n)
DOUBLE_FACTORIAL = np.array(_DFACT)


def _check_index(n: int) -> None:
    if n < 0 or n > TABLE_SIZE:
        raise ValueError(f"index {n} outside the tabulated range 0..{TABLE_SIZE}")


def double_factorial(n: int) -> float:
    """Return ``n!!`` for ``-1 <= n <= 256`` (with ``(-1)!! = 0!! = 1``)."""
    if n < -1 or n > TABLE_SIZE:
        raise ValueError(f"index {n} outside the tabulated range -1..{TABLE_SIZE}")
    return DOUBLE_FACTORIAL[n + 1]


def normal_ccdf(w):
    """Standard normal survival function ``P(Z > w)``."""
    w = np.asarray(w, dtype=float)
    out = 0.5 * erfc(w / SQRT2)
    return out[()] if out.ndim == 0 else out


def mills_ratio(w):
    r"""Mill's ratio :math:`\varphi(w)=\sqrt{2\pi}e^{w^2/2}\Phi^c(w)`.

    Evaluated as ``sqrt(pi/2) * erfcx(w / sqrt(2))`` which is accurate and
    free of intermediate overflow for large positive ``w``.
    """
    w = np.asarray(w, dtype=float)
    out = 0.5 * SQRT2PI * erfcx(w / SQRT2)
    return out[()] if out.ndim == 0 else out


def jq(q: int, omega, tau):
    r"""The integral :math:`\mathcal J_q(\omega,\tau)`.

    .. math::
        \mathcal J_q = e^{-\omega^2/2} e^{x^2/2}\int_{-\infty}^{-x} u^q e^{-u^2/2}\,du,
        \qquad x=\omega+\tau .

    Closed forms in terms of ``J_0 = exp(-omega^2/2) * mills(x)`` and
    ``J_1 = -exp(-omega^2/2)`` are used for every ``q``.
    """
    _check_index(q)
    omega = np.asarray(omega, dtype=float)
    x = omega + np.asarray(tau, dtype=float)
    e = np.exp(-0.5 * omega**2)
    j1 = -e
    if q == 0:
        out = e * mills_ratio(x)
    elif q == 1:
        out = j1 * np.ones_like(x)
    elif q % 2 == 0:
        dq = double_factorial(q - 1)
        s = sum(x ** (q - 2 * k - 1) * dq / double_factorial(q - 2 * k - 1) for k in range(q // 2))
        out = e * mills_ratio(x) * dq - j1 * s
    else:
        h = (q - 1) // 2
        s = sum(x ** (q - 1 - 2 * k) * 2.0**k * FACTORIAL[h] / FACTORIAL[h - k] for k in range(h + 1))
        out = j1 * s
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def jq_recursive(qmax: int, omega, tau) -> np.ndarray:
    """All ``J_0..J_qmax`` via the three-term recursion (consistency check)."""
    omega = np.asarray(omega, dtype=float)
    x = omega + np.asarray(tau, dtype=float)
    out = np.empty((qmax + 1,) + np.broadcast(omega, x).shape)
    out[0] = jq(0, omega, tau)
    if qmax >= 1:
        out[1] = jq(1, omega, tau)
    for q in range(2, qmax + 1):
        out[q] = (q - 1) * out[q - 2] + (-1) ** (q - 1) * x ** (q - 1) * out[1]
    return out


def s_sum(L: int, n: int, omega, a, tau):
    r"""The double binomial sum :math:`\mathcal S_{L,n}(\omega,\mathfrak a,\tau)`."""
    omega = np.asarray(omega, dtype=float)
    x = omega + tau
    at = a + tau
    total = 0.0
    for n1 in range(n + 1):
        for l1 in range(L + 1):
            total = total + comb(n, n1) * comb(L, l1) * x ** (n - n1) * at ** (L - l1) * jq(n1 + l1, omega, tau)
    return total


@lru_cache(maxsize=None)
def hermite_coefficient(n: int, ell: int) -> float:
    """Coefficient ``n! (-1)^l / (2^l l! (n-2l)!)`` of the probabilists' Hermite polynomial."""
    _check_index(n)
    return FACTORIAL[n] * (-1) ** ell / (2.0**ell * FACTORIAL[ell] * FACTORIAL[n - 2 * ell])


def g_sum(K: int, m: int, n: int, omega, a, tau):
    r"""The Hermite-weighted sum :math:`\mathscr G_{K,m,n}(\omega,\mathfrak a,\tau)`."""
    km = K + m
    total = 0.0
    for ell in range(km // 2 + 1):
        total = total + hermite_coefficient(km, ell) * s_sum(km - 2 * ell, n, omega, a, tau)
    return (-1) ** K * total


def fourier_kernel_f(k: int, omega, a1: float, a2: float):
    r"""Fourier kernel :math:`f_k(\omega,a_1,a_2)`, supported on ``omega < 0``.

    It is the transform of ``-1 / ((w - i a1)(w - i a2))**k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if a1 <= 0 or a2 <= 0:
        raise ValueError("a1 and a2 must be positive")
    if a1 == a2:
        raise ValueError("a1 == a2 requires the equal-parameter branch")
    omega = np.asarray(omega, dtype=float)
    kk = k - 1
    d = a1 - a2
    neg = omega < 0
    w = np.where(neg, omega, 0.0)
    g1 = np.where(neg, np.exp(a1 * w), 0.0)
    g2 = np.where(neg, np.exp(a2 * w), 0.0)
    total = np.zeros_like(w)
    for n in range(kk + 1):
        c = FACTORIAL[2 * kk - n] / (FACTORIAL[n] * FACTORIAL[kk - n])
        total = total + c * d**n * w**n * (g2 - (-1) ** n * g1)
    out = SQRT2PI / (d ** (2 * kk + 1) * FACTORIAL[kk]) * total
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Gaussian moments of exponential kernels, the workhorse of the series engine
# ---------------------------------------------------------------------------

def gauss_exp_moments(nmax: int, x) -> np.ndarray:
    r"""Table of :math:`M_n(x)=\int_0^\infty s^n e^{-sx-s^2/2}\,ds` for ``n <= nmax``.

    ``M_0`` is Mill's ratio and ``M_1 = 1 - x M_0``.  The forward recursion
    ``M_n = (n-1) M_{n-2} - x M_{n-1}`` is used where ``x < 1``; elsewhere the
    ratios ``M_n / M_{n-1}`` come from a backward continued fraction.

    Returns
    -------
    ndarray of shape ``(nmax + 1,) + x.shape``
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = mills_ratio(x)
    if nmax == 0:
        return out
    small = x < 1.0
    if np.any(small):
        xs = x[small]
        prev, cur = out[0][small], 1.0 - xs * out[0][small]
        out[1][small] = cur
        for n in range(2, nmax + 1):
            prev, cur = cur, (n - 1) * prev - xs * cur
            out[n][small] = cur
    if not np.all(small):
        xl = x[~small]
        depth = nmax + 60 + int(400.0 / float(np.min(xl)) ** 2)
        ratios = np.empty((nmax + 1,) + xl.shape)
        r = np.zeros_like(xl)
        for j in range(depth, 0, -1):
            r = j / (xl + r)
            if j <= nmax:
                ratios[j] = r
        m = out[0][~small]
        for n in range(1, nmax + 1):
            m = m * ratios[n]
            out[n][~small] = m
    return out


def hermite_table(nmax: int, x) -> np.ndarray:
    """Probabilists' Hermite polynomials ``He_0..He_nmax`` at ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for n in range(1, nmax):
        out[n + 1] = x * out[n] - n * out[n - 1]
    return out


def feynman_weights(p: int, q: int, delta: float, tol: float = 1e-18, max_terms: int = 400) -> np.ndarray:
    r"""Weights ``c_n`` with ``Lambda[(v+A1)^-p (v+A2)^-q] = sum_n c_n M_{p+q-1+n}(x_2)``.

    Here ``delta = A1 - A2`` and
    ``c_n = (-delta)^n / n! * Gamma(p+n) / (Gamma(p) Gamma(p+q+n))``.
    Terms stop once ``|c_n| sqrt((p+q+n)!)`` (a crude bound on the growth of
    ``M_n``) is below ``tol`` relative to the first term.
    """
    if delta == 0.0:
        return np.array([exp(-lgamma(p + q))])
    out = []
    ref = None
    for n in range(max_terms):
        lg = lgamma(p + n) - lgamma(p) - lgamma(p + q + n) - lgamma(n + 1) + n * np.log(abs(delta))
        sign = 1.0 if (delta < 0 or n % 2 == 0) else -1.0
        out.append(sign * exp(lg))
        size = lg + 0.5 * lgamma(p + q + n + 1)
        if ref is None:
            ref = size
        elif size < ref + np.log(tol):
            break
    return np.array(out)
