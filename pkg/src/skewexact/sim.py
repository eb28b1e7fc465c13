"""Exact path simulation by retrospective rejection, plus an Euler baseline.

A proposal path is drawn from the instrumental law (endpoint from the
h-target, intermediate values from bridge targets) and thinned against a
Poisson field of height ``phi_sup``: the path survives when every field
point lies strictly above the graph of ``phi_plus`` along the path.

All batch routines take one random stream per sample, so the output for
sample ``i`` depends only on its own stream and never on batch size.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .grs import grs_batch, make_bridge_target, make_h_target, theta_from_drift

MAX_RESTARTS = 10**6


@dataclass
class PoissonField:
    """Points of a unit-rate Poisson process on ``(0, T) x (0, m)``."""

    T: float
    m: float
    times: np.ndarray
    heights: np.ndarray

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass
class Skeleton:
    """Finite set of exactly sampled ``(time, value)`` pairs of one path."""

    times: np.ndarray
    values: np.ndarray
    exact_flags: np.ndarray
    seed: object = None
    restarts: int = 0
    endpoint_proposals: int = 0
    bridge_proposals: int = 0
    bridge_draws: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.exact_flags = np.asarray(self.exact_flags, dtype=bool)
        if not (self.times.shape == self.values.shape == self.exact_flags.shape):
            raise ValueError("times, values and flags must have equal length")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("skeleton times must be non-decreasing")

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    @property
    def exact(self) -> bool:
        return bool(np.all(self.exact_flags))


@dataclass
class SimConfig:
    """Run configuration of the exact samplers.

    ``T_el`` is clamped to ``1 / phi_sup`` by :func:`effective_T_el`.
    ``tighten_mb`` replaces the endpoint constant ``M_B`` by a certified grid
    bound; ``progressive`` draws the Poisson field point by point and stops
    at the first rejection.
    """

    T: float = 1.0
    T_el: float = 0.55
    delta: float = 0.75
    seed: int = 0
    n_cap: int = 64
    tol: float = 1e-10
    tighten_mb: bool = True
    progressive: bool = False

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.T_el > 0:
            raise ValueError("T_el must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


def effective_T_el(spec, T_el: float) -> float:
    """``min(T_el, 1 / phi_sup)``; any length is allowed when ``phi_sup = 0``."""
    return T_el if spec.phi_sup <= 0 else min(T_el, 1.0 / spec.phi_sup)


def spawn_streams(seed: int, n: int) -> List[np.random.Generator]:
    """One independent generator per sample, derived from a single seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_poisson_field(T: float, m: float, rng: np.random.Generator) -> PoissonField:
    """Draw all points of the field at once (count, then sorted times, then heights)."""
    if m <= 0:
        return PoissonField(T, m, np.empty(0), np.empty(0))
    M = rng.poisson(T * m)
    times = np.sort(rng.uniform(0.0, T, M), kind="stable")
    heights = rng.uniform(0.0, m, M)
    return PoissonField(T, m, times, heights)


def _next_progressive(rng, prev: float, T: float, m: float):
    if m <= 0:
        return None
    tau = prev + rng.exponential(1.0 / m)
    if tau >= T:
        return None
    return tau, rng.uniform(0.0, m)


def rrs_batch(spec, x0, t0: float, T: float, cfg: SimConfig,
              rngs: Sequence[np.random.Generator], seeds: Optional[Sequence] = None) -> List[Skeleton]:
    """Retrospective rejection sampling over ``[t0, t0 + T]`` for a batch of starts."""
    n = len(rngs)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()
    theta = theta_from_drift(spec)
    m = spec.phi_sup
    z1 = spec.z1
    out: List[Optional[Skeleton]] = [None] * n
    restarts = np.zeros(n, dtype=np.int64)
    h_props = np.zeros(n, dtype=np.int64)
    b_props = np.zeros(n, dtype=np.int64)
    b_draws = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    while pending.size:
        if np.any(restarts[pending] > MAX_RESTARTS):
            raise RuntimeError("restart cap reached")
        rp = [rngs[i] for i in pending]
        fields = None if cfg.progressive else [sample_poisson_field(T, m, r) for r in rp]
        target = make_h_target(spec, theta, x0[pending], T, cfg.delta, tighten=cfg.tighten_mb)
        end = grs_batch(target, rp)
        h_props[pending] += end.proposals
        size = pending.size
        path_t = [[0.0] for _ in range(size)]
        path_y = [[x0[i]] for i in pending]
        path_f = [[True] for _ in range(size)]
        prev_t = np.zeros(size)
        prev_y = x0[pending].copy()
        alive = np.ones(size, dtype=bool)
        active = np.ones(size, dtype=bool)
        k = 0
        while True:
            idx, taus, hts = [], [], []
            for a in np.nonzero(alive & active)[0]:
                if cfg.progressive:
                    pt = _next_progressive(rp[a], prev_t[a], T, m)
                else:
                    f = fields[a]
                    pt = (f.times[k], f.heights[k]) if k < len(f) else None
                if pt is None:
                    active[a] = False
                    continue
                idx.append(a)
                taus.append(pt[0])
                hts.append(pt[1])
            if not idx:
                break
            idx = np.array(idx)
            taus = np.array(taus)
            hts = np.array(hts)
            y = prev_y[idx].copy()
            ex = np.ones(idx.size, dtype=bool)
            move = taus > prev_t[idx]
            if np.any(move):
                mi = idx[move]
                bt = make_bridge_target(theta, taus[move] - prev_t[mi], T - prev_t[mi], prev_y[mi],
                                        end.value[mi], shift=z1)
                br = grs_batch(bt, [rp[a] for a in mi])
                y[move] = br.value
                ex[move] = br.exact
                b_props[pending[mi]] += br.proposals
                b_draws[pending[mi]] += 1
            for j, a in enumerate(idx):
                path_t[a].append(taus[j])
                path_y[a].append(y[j])
                path_f[a].append(bool(ex[j]))
            prev_t[idx] = taus
            prev_y[idx] = y
            # a field point on or below the graph kills the proposal
            alive[idx[hts <= spec.phi_plus(y)]] = False
            k += 1
        for a in np.nonzero(alive)[0]:
            i = pending[a]
            out[i] = Skeleton(t0 + np.array(path_t[a] + [T]), np.array(path_y[a] + [end.value[a]]),
                              np.array(path_f[a] + [bool(end.exact[a])]),
                              seed=None if seeds is None else seeds[i], restarts=int(restarts[i]),
                              endpoint_proposals=int(h_props[i]), bridge_proposals=int(b_props[i]),
                              bridge_draws=int(b_draws[i]))
        restarts[pending[~alive]] += 1
        pending = pending[~alive]
    return out


def _concat(parts: List[Skeleton]) -> Skeleton:
    first = parts[0]
    t = [first.times]
    v = [first.values]
    f = [first.exact_flags]
    for p in parts[1:]:
        t.append(p.times[1:])
        v.append(p.values[1:])
        f.append(p.exact_flags[1:])
    return Skeleton(np.concatenate(t), np.concatenate(v), np.concatenate(f), seed=first.seed,
                    restarts=sum(p.restarts for p in parts),
                    endpoint_proposals=sum(p.endpoint_proposals for p in parts),
                    bridge_proposals=sum(p.bridge_proposals for p in parts),
                    bridge_draws=sum(p.bridge_draws for p in parts))


def split_count(T: float, T_el: float) -> int:
    """Number ``ceil(T / T_el)`` of congruent sub-intervals."""
    return max(1, math.ceil(T / T_el - 1e-12))


def srrs_batch(spec, x0, t0: float, T: float, cfg: SimConfig,
               rngs: Sequence[np.random.Generator], seeds: Optional[Sequence] = None) -> List[Skeleton]:
    """Split sampler: chain :func:`rrs_batch` over ``ceil(T / T_el)`` equal pieces."""
    if spec.phi_sup > 0 and cfg.T_el > 1.0 / spec.phi_sup + 1e-12:
        raise ValueError(f"T_el={cfg.T_el} exceeds 1/phi_sup={1.0 / spec.phi_sup:.6g}")
    m_split = split_count(T, cfg.T_el)
    h = T / m_split
    x = np.broadcast_to(np.asarray(x0, dtype=float), (len(rngs),)).copy()
    pieces: List[List[Skeleton]] = []
    for j in range(m_split):
        sk = rrs_batch(spec, x, t0 + j * h, h, cfg, rngs, seeds)
        pieces.append(sk)
        x = np.array([s.terminal for s in sk])
    return [_concat([pieces[j][i] for j in range(m_split)]) for i in range(len(rngs))]


def rrs(spec, x0: float, t0: float, T: float, cfg: SimConfig, rng: np.random.Generator) -> Skeleton:
    """One exact skeleton on ``[t0, t0 + T]``."""
    return rrs_batch(spec, x0, t0, T, cfg, [rng])[0]


def srrs(spec, x0: float, t0: float, T: float, cfg: SimConfig, rng: np.random.Generator) -> Skeleton:
    """One exact skeleton built from split pieces."""
    return srrs_batch(spec, x0, t0, T, cfg, [rng])[0]


def simulate(spec, x0: float, cfg: SimConfig, n: int, method: str = "srrs") -> List[Skeleton]:
    """``n`` skeletons on ``[0, cfg.T]`` with streams spawned from ``cfg.seed``."""
    rngs = spawn_streams(cfg.seed, n)
    seeds = [(cfg.seed, i) for i in range(n)]
    if method == "srrs":
        cfg = SimConfig(**{**asdict(cfg), "T_el": effective_T_el(spec, cfg.T_el)})
        return srrs_batch(spec, x0, 0.0, cfg.T, cfg, rngs, seeds)
    if method == "rrs":
        return rrs_batch(spec, x0, 0.0, cfg.T, cfg, rngs, seeds)
    raise ValueError(f"unknown exact method {method!r}")


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def fill_path_batch(skeletons: Sequence[Skeleton], times, theta, rngs: Sequence[np.random.Generator],
                    shift: float = 0.0) -> List[Skeleton]:
    """Insert bridge-sampled values at ``times`` into every skeleton.

    Times are processed in increasing order, each conditioned on its two
    current neighbours, so inserted values are exact draws from the bridge
    law of the instrumental process.  Existing times are left untouched.
    """
    times = np.sort(np.asarray(times, dtype=float))
    sk = [Skeleton(s.times.copy(), s.values.copy(), s.exact_flags.copy(), s.seed, s.restarts,
                   s.endpoint_proposals, s.bridge_proposals, s.bridge_draws) for s in skeletons]
    for s in sk:
        if times.size and (times[0] < s.times[0] or times[-1] > s.times[-1]):
            raise ValueError("requested time outside the skeleton span")
    for u in times:
        who, pos = [], []
        for i, s in enumerate(sk):
            p = int(np.searchsorted(s.times, u))
            if s.times[p] == u:
                continue
            who.append(i)
            pos.append(p)
        if not who:
            continue
        pos = np.array(pos)
        left_t = np.array([sk[i].times[p - 1] for i, p in zip(who, pos)])
        right_t = np.array([sk[i].times[p] for i, p in zip(who, pos)])
        left_y = np.array([sk[i].values[p - 1] for i, p in zip(who, pos)])
        right_y = np.array([sk[i].values[p] for i, p in zip(who, pos)])
        tg = make_bridge_target(theta, u - left_t, right_t - left_t, left_y, right_y, shift=shift)
        res = grs_batch(tg, [rngs[i] for i in who])
        for j, (i, p) in enumerate(zip(who, pos)):
            s = sk[i]
            s.times = np.insert(s.times, p, u)
            s.values = np.insert(s.values, p, res.value[j])
            s.exact_flags = np.insert(s.exact_flags, p, bool(res.exact[j]))
    return sk


def fill_path(skeleton: Skeleton, times, theta, rng: np.random.Generator, shift: float = 0.0) -> Skeleton:
    """Single-skeleton version of :func:`fill_path_batch`."""
    return fill_path_batch([skeleton], times, theta, [rng], shift)[0]


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------

def euler_maruyama(spec, x0, T: float, step: float, rng: np.random.Generator, n: Optional[int] = None):
    """Explicit Euler scheme ``X += b(X) h + sqrt(h) Z``; returns ``X_T``.

    With ``n`` given, ``n`` independent paths are advanced together from one
    stream and an array is returned.
    """
    if not 0 < step <= T:
        raise ValueError("need 0 < step <= T")
    steps = max(1, int(round(T / step)))
    h = T / steps
    sq = math.sqrt(h)
    x = np.full(1 if n is None else n, float(x0)) if np.ndim(x0) == 0 else np.array(x0, dtype=float)
    for _ in range(steps):
        x = x + spec.b(x) * h + sq * rng.standard_normal(x.shape)
    return float(x[0]) if n is None and np.ndim(x0) == 0 else x


# ---------------------------------------------------------------------------
# IO
# ---------------------------------------------------------------------------

CSV_HEADER = ["sample_id", "time", "value", "exact_flag"]


def write_skeletons_csv(path, skeletons: Sequence[Skeleton], terminal_only: bool = False) -> None:
    """Write skeletons (or only their terminal points) as CSV rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for i, s in enumerate(skeletons):
            rows = [len(s.times) - 1] if terminal_only else range(len(s.times))
            for r in rows:
                w.writerow([i, repr(float(s.times[r])), repr(float(s.values[r])), int(s.exact_flags[r])])


def read_skeletons_csv(path) -> List[Skeleton]:
    """Inverse of :func:`write_skeletons_csv`."""
    data = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            d = data.setdefault(int(row["sample_id"]), ([], [], []))
            d[0].append(float(row["time"]))
            d[1].append(float(row["value"]))
            d[2].append(bool(int(row["exact_flag"])))
    return [Skeleton(*data[k]) for k in sorted(data)]


def batch_metadata(cfg: SimConfig, skeletons: Sequence[Skeleton], method: str, extra: Optional[dict] = None) -> dict:
    """Config echo and diagnostics for a simulated batch."""
    n = len(skeletons)
    meta = {
        "method": method,
        "config": asdict(cfg),
        "samples": n,
        "stream": "numpy SeedSequence(seed).spawn(samples)",
        "mean_restarts": float(np.mean([s.restarts for s in skeletons])) if n else 0.0,
        "mean_endpoint_proposals": float(np.mean([s.endpoint_proposals for s in skeletons])) if n else 0.0,
        "bridge_draws": int(sum(s.bridge_draws for s in skeletons)),
        "bridge_proposals": int(sum(s.bridge_proposals for s in skeletons)),
        "inexact_samples": int(sum(not s.exact for s in skeletons)),
    }
    if extra:
        meta.update(extra)
    return meta


def write_json(path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=float)
