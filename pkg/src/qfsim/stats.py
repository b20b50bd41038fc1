"""Ensemble reduction and statistical checks on simulated records."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import linops as lo
from .filtering import BatchResult, FilterSpec, MeasurementRecord, Trajectory, run_batch
from .lindblad import GeneratorSpec, superop_from_generator

DEFAULT_CHUNK = 4096


class StatsError(ValueError):
    pass


def worker_count() -> int:
    """Worker cap from ``QFSIM_THREADS`` (default 1)."""
    raw = os.environ.get("QFSIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise StatsError(f"QFSIM_THREADS must be an integer, got {raw!r}") from exc


@dataclass
class EnsembleSummary:
    times: np.ndarray
    mean: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n: int
    seed: int

    @property
    def stderr(self) -> np.ndarray:
        """Standard error of each complex entry, ``sqrt(se_re^2 + se_im^2)``."""
        return np.hypot(self.stderr_re, self.stderr_im)

    def at(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise StatsError(f"time {t} is not on the saved grid")
        return i


@dataclass
class EnsembleRun:
    """Reduced ensemble plus the per-trajectory quantities that were requested."""

    summary: EnsembleSummary
    innovation_sum: np.ndarray
    martingale: dict
    click_times: list | None
    records: np.ndarray | None
    final: np.ndarray
    distance_mean: np.ndarray | None
    states: np.ndarray | None = None


def _combine(parts: Sequence[BatchResult], seed: int) -> EnsembleRun:
    n = sum(p.n for p in parts)
    if n < 2:
        raise StatsError("need at least two trajectories")
    mean = sum(p.total for p in parts) / n
    # pooled squared deviations: within-batch parts plus the spread of the batch means
    m2_re = sum(p.sq_re + p.n * (p.total.real / p.n - mean.real) ** 2 for p in parts)
    m2_im = sum(p.sq_im + p.n * (p.total.imag / p.n - mean.imag) ** 2 for p in parts)
    var_re = m2_re / (n - 1)
    var_im = m2_im / (n - 1)
    summary = EnsembleSummary(times=parts[0].times, mean=lo.unvec(mean),
                              stderr_re=lo.unvec(np.sqrt(var_re / n)).real,
                              stderr_im=lo.unvec(np.sqrt(var_im / n)).real, n=n, seed=seed)
    mart = {}
    for key in parts[0].martingale:
        mart[key] = np.concatenate([p.martingale[key] for p in parts])
    clicks = None
    if parts[0].click_times is not None:
        clicks = [c for p in parts for c in p.click_times]
    records = None
    if parts[0].records is not None:
        records = np.concatenate([p.records for p in parts])
    dist = None
    if parts[0].distance_mean is not None:
        dist = np.concatenate([p.distance_mean for p in parts])
    states = None
    if parts[0].states is not None:
        states = np.concatenate([p.states for p in parts], axis=1)
    return EnsembleRun(summary=summary, states=states,
                       innovation_sum=np.concatenate([p.innovation_sum for p in parts]),
                       martingale=mart, click_times=clicks, records=records,
                       final=np.concatenate([p.final for p in parts]), distance_mean=dist)


def run_ensemble(spec: FilterSpec, gen: GeneratorSpec, rho0: np.ndarray, n: int, seed: int, *,
                 chunk: int = DEFAULT_CHUNK, workers: int | None = None, **kw) -> EnsembleRun:
    """Simulate trajectories ``0..n-1`` in fixed-size chunks and reduce them in index order.

    Chunking is part of the reduction order, so results do not depend on the
    number of workers. Extra keywords go to :func:`qfsim.filtering.run_batch`.
    """
    if n < 2:
        raise StatsError("need at least two trajectories")
    starts = list(range(0, n, chunk))
    workers = worker_count() if workers is None else workers

    replay = kw.pop("replay", None)
    if replay is not None:
        replay = np.asarray(replay, dtype=float)
        if replay.shape[0] != n:
            raise StatsError(f"replay has {replay.shape[0]} records for {n} trajectories")

    def job(a: int) -> BatchResult:
        b = min(a + chunk, n)
        part = None if replay is None else replay[a:b]
        return run_batch(spec, gen, rho0, seed, range(a, b), replay=part, **kw)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(a) for a in starts]
    return _combine(parts, seed)


def ensemble_mean(spec: FilterSpec, gen: GeneratorSpec, rho0: np.ndarray, n: int, seed: int,
                  **kw) -> EnsembleSummary:
    return run_ensemble(spec, gen, rho0, n, seed, **kw).summary


def mean_within(mean: np.ndarray, exact: np.ndarray, stderr: np.ndarray, slack: float,
                k: float = 3.0) -> bool:
    """Entrywise ``|mean - exact| <= k * stderr + slack``."""
    return bool(np.all(np.abs(mean - exact) <= k * stderr + slack))


@dataclass
class IntervalSample:
    intervals: np.ndarray
    first: np.ndarray
    trajectory: np.ndarray

    @property
    def subsequent(self) -> np.ndarray:
        return self.intervals[~self.first]

    def __len__(self) -> int:
        return len(self.intervals)


def _click_times(run) -> np.ndarray:
    if isinstance(run, Trajectory):
        return run.record.click_times()
    if isinstance(run, MeasurementRecord):
        return run.click_times()
    return np.asarray(run, dtype=float)


def extract_intervals(runs: Iterable) -> IntervalSample:
    """Waiting times between consecutive clicks, plus the time to the first click."""
    ivs, first, traj = [], [], []
    for i, run in enumerate(runs):
        ts = _click_times(run)
        if ts.size == 0:
            continue
        d = np.diff(np.concatenate([[0.0], ts]))
        ivs.append(d)
        f = np.zeros(d.size, dtype=bool)
        f[0] = True
        first.append(f)
        traj.append(np.full(d.size, i))
    if not ivs:
        return IntervalSample(np.empty(0), np.empty(0, dtype=bool), np.empty(0, dtype=int))
    return IntervalSample(np.concatenate(ivs), np.concatenate(first), np.concatenate(traj))


def ks_distance(sample, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(sample.subsequent if isinstance(sample, IntervalSample) else sample,
                           dtype=float))
    m = x.size
    if m == 0:
        raise StatsError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, m + 1) / m - F
    lower = F - np.arange(m) / m
    return float(max(upper.max(), lower.max()))


def interval_correlation(sample: IntervalSample) -> float:
    """Pearson correlation of consecutive subsequent intervals of the same trajectory."""
    x, y = [], []
    sub = ~sample.first
    same = (sample.trajectory[1:] == sample.trajectory[:-1]) & sub[1:] & sub[:-1]
    x = sample.intervals[:-1][same]
    y = sample.intervals[1:][same]
    if x.size < 2:
        raise StatsError("not enough consecutive interval pairs")
    return float(np.corrcoef(x, y)[0, 1])


def coincidence_rate(runs: Iterable, delta: float, dt: float = 0.0) -> float:
    """Fraction of consecutive click pairs closer than ``delta``, divided by ``delta``.

    Click times on a grid of step ``dt`` are compared with a half-step margin
    so that ``delta = k dt`` counts separations of at most ``k - 1`` steps.
    Returns 0 when there are no pairs.
    """
    if delta <= 0 or delta < dt:
        raise StatsError(f"delta = {delta!r} must be positive and at least dt = {dt!r}")
    gaps = [np.diff(_click_times(r)) for r in runs]
    gaps = np.concatenate(gaps) if gaps else np.empty(0)
    if gaps.size == 0:
        return 0.0
    return float(np.count_nonzero(gaps < delta - 0.5 * dt) / gaps.size / delta)


def martingale_residual(traj: Trajectory, gen: GeneratorSpec, X: np.ndarray) -> np.ndarray:
    """``M_t = tr(rho_t X) - tr(rho_0 X) - int_0^t tr(L(rho_s) X) ds`` on the run's grid.

    The integral uses the trapezoid rule.
    """
    X = np.asarray(X, dtype=complex)
    t = traj.times
    vals = np.empty(len(t))
    for i, (ti, r) in enumerate(zip(t, traj.states)):
        S = superop_from_generator(gen, ti)
        vals[i] = np.trace(lo.apply(S, r) @ X).real
    f = np.trace(traj.states @ X, axis1=-2, axis2=-1).real
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (vals[1:] + vals[:-1]))])
    return f - f[0] - integral


def mean_and_stderr(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise StatsError("need at least two values")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
