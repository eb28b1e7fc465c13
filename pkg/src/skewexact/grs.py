"""Generalised rejection sampling with series-valued acceptance functions.

The acceptance ratio ``f`` is known only through partial sums ``f_N`` and
remainder bounds ``r_N >= |f - f_N|``.  A proposal is accepted or rejected
as soon as ``|f_N(y) - u| >= r_N``; otherwise more terms are added.

Targets are *batched*: one :class:`SeriesTarget` may hold ``size``
independent targets (for instance one endpoint law per sample path), each
driven by its own random stream.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .density import (ThetaParams, bar_remainder, bridge_marginal, renormalisation, series_terms)

UNDECIDED_LEVEL = 5e-5
MAX_PROPOSALS = 10**6
DEFAULT_BATCH = 8


def n_max_from(remainder: np.ndarray, level: float = UNDECIDED_LEVEL) -> int:
    """Smallest ``N`` with ``remainder[N] <= level`` (last index if none)."""
    ok = np.nonzero(np.asarray(remainder) <= level)[0]
    return int(ok[0]) if ok.size else len(remainder) - 1


@dataclass
class SeriesTarget:
    """A batch of rejection targets known through convergent series.

    Parameters
    ----------
    instrumental_sampler : callable
        ``(rng, i, size) -> ndarray`` drawing ``size`` proposals for target ``i``.
    partial_sum : callable
        ``(N, y, i) -> f_N(y)`` with ``i`` the target index of each ``y``.
    remainder : ndarray
        ``(size, L)`` table of non-increasing bounds ``r_N``; a 1-D array is
        shared by all targets.
    n_max : int or ndarray
        Last usable ``N`` per target.
    """

    instrumental_sampler: Callable
    partial_sum: Callable
    remainder: np.ndarray
    n_max: np.ndarray
    size: int = 1
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.remainder, dtype=float)
        if r.ndim == 1:
            r = np.broadcast_to(r, (self.size, r.size)).copy()
        self.remainder = r
        self.n_max = np.broadcast_to(np.asarray(self.n_max, dtype=int), (self.size,)).copy()
        if np.any(np.diff(r, axis=1) > 0):
            raise ValueError("remainder bounds must be non-increasing")

    def remainder_inverse(self, u, i):
        """``min{N <= N_max : r_N <= u}``, or ``N_max`` when no bound is small enough."""
        u = np.asarray(u, dtype=float)
        i = np.asarray(i, dtype=int)
        rows = self.remainder[i]
        L = rows.shape[-1]
        ok = (rows <= u[..., None]) & (np.arange(L) <= self.n_max[i][..., None])
        first = np.where(ok.any(axis=-1), ok.argmax(axis=-1), self.n_max[i])
        return np.minimum(first, self.n_max[i])


@dataclass
class GrsOutcome:
    """Result of one generalised rejection draw."""

    value: float
    exact: bool
    proposals: int
    max_terms_used: int


@dataclass
class GrsBatch:
    """Vectorised outcomes for every target of a :class:`SeriesTarget`."""

    value: np.ndarray
    exact: np.ndarray
    proposals: np.ndarray
    max_terms_used: np.ndarray

    def outcome(self, i: int) -> GrsOutcome:
        return GrsOutcome(float(self.value[i]), bool(self.exact[i]), int(self.proposals[i]),
                          int(self.max_terms_used[i]))


def grs_batch(target: SeriesTarget, rngs: Sequence[np.random.Generator], batch: int = DEFAULT_BATCH,
              hard_fail: bool = False) -> GrsBatch:
    """Run the generalised rejection sampler on every target of the batch.

    Proposals are drawn ``batch`` at a time from each target's own stream;
    the first decided-acceptable proposal in stream order is returned, so the
    output of target ``i`` depends only on ``rngs[i]``.
    """
    n = target.size
    if len(rngs) != n:
        raise ValueError(f"need one stream per target ({n}), got {len(rngs)}")
    value = np.full(n, np.nan)
    exact = np.ones(n, dtype=bool)
    props = np.zeros(n, dtype=np.int64)
    terms = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    while pending.size:
        if np.any(props[pending] >= MAX_PROPOSALS):
            raise RuntimeError("proposal cap reached: acceptance probability looks like zero")
        U = np.stack([rngs[i].random(batch) for i in pending])
        Y = np.stack([np.asarray(target.instrumental_sampler(rngs[i], i, batch), float) for i in pending])
        idx = np.repeat(pending[:, None], batch, axis=1)
        N = np.zeros(Y.shape, dtype=int)
        f = np.asarray(target.partial_sum(0, Y.ravel(), idx.ravel()), float).reshape(Y.shape)
        r = target.remainder[idx, N]
        nmax = target.n_max[idx]
        open_ = (np.abs(f - U) < r) & (N < nmax)
        while np.any(open_):
            newN = target.remainder_inverse(np.abs(f - U)[open_], idx[open_])
            N[open_] = newN
            sel = np.argwhere(open_)
            for m in np.unique(newN):
                pick = sel[newN == m]
                rr, cc = pick[:, 0], pick[:, 1]
                f[rr, cc] = target.partial_sum(int(m), Y[rr, cc], idx[rr, cc])
            r = target.remainder[idx, N]
            open_ = (np.abs(f - U) < r) & (N < nmax)
        undecided = np.abs(f - U) < r
        if hard_fail and np.any(undecided):
            raise RuntimeError("undecidable proposal at N_max")
        stop = undecided | (f > U)
        has = stop.any(axis=1)
        col = np.where(has, stop.argmax(axis=1), batch - 1)
        used = np.where(np.arange(batch)[None, :] <= col[:, None], N + 1, 0).max(axis=1)
        terms[pending] = np.maximum(terms[pending], used)
        props[pending] += np.where(has, col + 1, batch)
        rows = np.nonzero(has)[0]
        value[pending[rows]] = Y[rows, col[rows]]
        exact[pending[rows]] = ~undecided[rows, col[rows]]
        pending = pending[~has]
    return GrsBatch(value, exact, props, terms)


def grs(target: SeriesTarget, rng: np.random.Generator, batch: int = DEFAULT_BATCH,
        hard_fail: bool = False) -> GrsOutcome:
    """Single draw from a one-target :class:`SeriesTarget`."""
    if target.size != 1:
        raise ValueError("grs expects a single target; use grs_batch")
    return grs_batch(target, [rng], batch, hard_fail).outcome(0)


# ---------------------------------------------------------------------------
# the two concrete targets
# ---------------------------------------------------------------------------

def theta_from_drift(spec, a_shift: Optional[float] = None) -> ThetaParams:
    """Limit parameters ``(theta1, theta2, z2 - z1)`` of a drift."""
    return ThetaParams(spec.theta1, spec.theta2, spec.z, a_shift)


def _remainder_table(theta: ThetaParams, t, level: float = UNDECIDED_LEVEL, cap: int = 64):
    """Rows ``r_0..r_L`` of the renormalised-series bound with a shared length."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    L = 0
    while L < cap and np.max(bar_remainder(theta, t, L)) > level:
        L += 1
    return np.stack([np.broadcast_to(bar_remainder(theta, t, N), t.shape) for N in range(L + 1)], axis=1)


def _tight_mb(spec, x0: np.ndarray, T: float, delta: float, ceiling: float) -> np.ndarray:
    """Rigorous grid bound on ``max_y B(y) - B(x0) - delta (y-x0)^2 / (2T)``."""
    if spec.b_sup == 0.0:
        return np.zeros_like(x0)
    R = 2.0 * spec.b_sup * T / delta
    s = np.linspace(-R, R, 401)
    h = s[1] - s[0]
    vals = spec.B(x0[:, None] + s[None, :]) - spec.B(x0)[:, None] - delta * s**2 / (2.0 * T)
    lip = spec.b_sup + delta * R / T
    return np.minimum(vals.max(axis=1) + 0.5 * lip * h, ceiling)


def make_h_target(spec, theta: Optional[ThetaParams], x0, T: float, delta: float,
                  M_B=None, tighten: bool = False) -> SeriesTarget:
    """Endpoint target with Gaussian instrumental law ``N(x0, T / (1 - delta))``.

    ``f_N(y) = v_bar_N(T, x0, y) exp(B(y) - B(x0) - delta (y - x0)^2 / (2T) - M_B)``
    with coordinates of ``v_bar`` shifted so the first jump sits at 0.
    ``x0`` may be an array, giving one target per entry.  ``M_B`` defaults to
    ``b_sup**2 T / (2 delta)``; ``tighten=True`` replaces it by a grid bound.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not T > 0:
        raise ValueError("T must be positive")
    theta = theta_from_drift(spec) if theta is None else theta
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    ceiling = spec.b_sup**2 * T / (2.0 * delta)
    if M_B is None:
        M_B = _tight_mb(spec, x0, T, delta, ceiling) if tighten else np.full(x0.shape, ceiling)
    M_B = np.broadcast_to(np.asarray(M_B, dtype=float), x0.shape)
    sd = np.sqrt(T / (1.0 - delta))
    z1 = spec.z1
    scale = renormalisation(theta, T)
    B0 = spec.B(x0)

    def sampler(rng, i, size):
        return x0[i] + sd * rng.standard_normal(size)

    def partial_sum(N, y, i):
        y = np.asarray(y, float)
        v = series_terms(T, x0[i] - z1, y - z1, theta, N).sum(axis=0) * scale
        return v * np.exp(spec.B(y) - B0[i] - delta * (y - x0[i]) ** 2 / (2.0 * T) - M_B[i])

    rem = _remainder_table(theta, T)[0]
    return SeriesTarget(sampler, partial_sum, rem, n_max_from(rem), size=x0.size,
                        info={"M_B": M_B, "kind": "h"})


def bridge_remainder(theta: ThetaParams, t, T, N: int):
    """Bound ``r1 + r2 + r1 r2`` on the error of the product of two truncated series."""
    r1 = bar_remainder(theta, t, N)
    r2 = bar_remainder(theta, np.asarray(T) - t, N)
    return r1 + r2 + r1 * r2


def make_bridge_target(theta: ThetaParams, t, T, x1, x2, shift: float = 0.0) -> SeriesTarget:
    """Bridge target at time ``t`` between ``(0, x1)`` and ``(T, x2)``.

    The instrumental law is the Brownian-bridge marginal and
    ``f_N(y) = v_bar_N(t, x1, y) v_bar_N(T - t, y, x2)``.  All arguments may be
    arrays (one target per entry); ``shift`` is the location of the first
    barrier in the caller's coordinates.
    """
    t, T, x1, x2 = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (t, T, x1, x2)]
    t, T, x1, x2 = np.broadcast_arrays(t, T, x1, x2)
    if np.any(t <= 0) or np.any(t >= T):
        raise ValueError("need 0 < t < T")
    mean = x1 + t / T * (x2 - x1)
    sd = np.sqrt(t * (T - t) / T)
    s1 = renormalisation(theta, t)
    s2 = renormalisation(theta, T - t)

    def sampler(rng, i, size):
        return mean[i] + sd[i] * rng.standard_normal(size)

    def partial_sum(N, y, i):
        y = np.asarray(y, float) - shift
        a = series_terms(t[i], x1[i] - shift, y, theta, N).sum(axis=0) * np.atleast_1d(s1)[i if np.ndim(s1) else 0]
        b = series_terms(T[i] - t[i], y, x2[i] - shift, theta, N).sum(axis=0) \
            * np.atleast_1d(s2)[i if np.ndim(s2) else 0]
        return a * b

    L = 0
    while L < 64 and np.max(bridge_remainder(theta, t, T, L)) > UNDECIDED_LEVEL:
        L += 1
    rem = np.stack([np.broadcast_to(bridge_remainder(theta, t, T, N), t.shape) for N in range(L + 1)], axis=1)
    nmax = np.array([n_max_from(row) for row in rem])
    return SeriesTarget(sampler, partial_sum, rem, nmax, size=t.size, info={"kind": "bridge"})


def bridge_density_g(t, T, x1, x2, y):
    """Instrumental density of the bridge target."""
    return bridge_marginal(t, T, x1, x2, y)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass
class GrsDiagnostics:
    """Per-batch summary of a run of the rejection sampler."""

    draws: int
    acceptance_rate: float
    mean_proposals: float
    mean_terms: float
    inexact: int

    @classmethod
    def from_batch(cls, out: GrsBatch) -> "GrsDiagnostics":
        total = int(out.proposals.sum())
        return cls(draws=int(out.value.size), acceptance_rate=out.value.size / total,
                   mean_proposals=float(out.proposals.mean()), mean_terms=float(out.max_terms_used.mean()),
                   inexact=int((~out.exact).sum()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)
