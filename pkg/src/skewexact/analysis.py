"""Statistical checks and timing harness for simulated batches."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

DEFAULT_BANDWIDTH = 0.1
WARMUP = 10


@dataclass
class SampleBatch:
    """Finite sample with a method label and free-form metadata."""

    values: np.ndarray
    method: str = "unknown"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size == 0:
            raise ValueError("empty batch")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("batch contains non-finite values")


def _as_batch(b) -> SampleBatch:
    return b if isinstance(b, SampleBatch) else SampleBatch(b)


def kde(batch, bandwidth: float = DEFAULT_BANDWIDTH, grid=None):
    """Gaussian kernel density estimate evaluated on ``grid``.

    The default grid spans six bandwidths beyond the sample range.
    Returns an ``(n, 2)`` array of ``(x, density)`` rows.
    """
    batch = _as_batch(batch)
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    v = batch.values
    if grid is None:
        grid = np.linspace(v.min() - 6 * bandwidth, v.max() + 6 * bandwidth, 1201)
    grid = np.asarray(grid, dtype=float)
    dens = np.zeros_like(grid)
    # chunk over samples to keep memory bounded
    for s in range(0, v.size, 2048):
        d = (grid[:, None] - v[None, s:s + 2048]) / bandwidth
        dens += np.exp(-0.5 * d * d).sum(axis=1)
    dens /= v.size * bandwidth * np.sqrt(2 * np.pi)
    return np.column_stack([grid, dens])


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a, b = _as_batch(a), _as_batch(b)
    res = stats.ks_2samp(a.values, b.values, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_one_sample(a, cdf):
    """KS test of a batch against a closed-form CDF."""
    res = stats.kstest(_as_batch(a).values, cdf)
    return float(res.statistic), float(res.pvalue)


def _sampler(spec, method: str, cfg, n: int):
    from .sim import SimConfig, euler_maruyama, simulate
    if method in ("rrs", "srrs"):
        return lambda x0, T, seed: [s.terminal for s in simulate(
            spec, x0, SimConfig(**{**cfg.__dict__, "T": T, "seed": seed}), n, method)]
    if method.startswith("euler"):
        step = float(method.split(":", 1)[1]) if ":" in method else 1e-2
        return lambda x0, T, seed: euler_maruyama(spec, x0, T, step, np.random.default_rng(seed), n=n)
    raise ValueError(f"unknown method {method!r}")


def benchmark(spec, method: str, horizons: Sequence[float], n: int, cfg=None, x0: float = 0.5,
              repeats: int = 3, seed: int = 0):
    """Wall-clock cost of ``n`` terminal samples per horizon.

    ``method`` is ``rrs``, ``srrs`` or ``euler:<step>``.  Each horizon is
    timed ``repeats`` times after a warm-up of ten discarded samples.
    Returns rows ``(method, T, mean_seconds, sd, mean_seconds / T)`` where
    seconds are per sample.
    """
    from .sim import SimConfig
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = cfg or SimConfig()
    rows = []
    for T in horizons:
        _sampler(spec, method, cfg, WARMUP)(x0, T, seed)
        run = _sampler(spec, method, cfg, n)
        times = []
        for r in range(repeats):
            t0 = time.perf_counter()
            run(x0, T, seed + 1 + r)
            times.append((time.perf_counter() - t0) / n)
        mean = float(np.mean(times))
        rows.append((method, float(T), mean, float(np.std(times)), mean / T))
    return rows


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
