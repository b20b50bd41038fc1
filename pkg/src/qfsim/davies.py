"""Exact click statistics of the driven two-level atom.

Everything here is deterministic: densities of side-channel click records,
the no-click propagator between clicks, and the renewal law of the waiting
time between consecutive clicks. These serve as oracles for the Monte Carlo
filters.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

from . import linops as lo
from .lindblad import KAPPA_TOL, laser_amplitude

V = lo.LOWERING


class DaviesError(ValueError):
    pass


@dataclass(frozen=True)
class RFParams:
    """Laser amplitude ``z`` in the forward channel and the channel weights."""

    z: complex
    kappa_f: complex
    kappa_s: complex

    def __post_init__(self):
        total = abs(self.kappa_f) ** 2 + abs(self.kappa_s) ** 2
        if abs(total - 1) > KAPPA_TOL:
            raise DaviesError(f"|kappa_f|^2 + |kappa_s|^2 = {total!r}, expected 1")

    @classmethod
    def from_rabi(cls, omega: float, kappa_f: complex, kappa_s: complex) -> "RFParams":
        if omega != 0 and kappa_f == 0:
            raise DaviesError("a nonzero Rabi frequency needs kappa_f != 0")
        z = laser_amplitude(omega, kappa_f) if omega != 0 else 0j
        return cls(z=complex(z), kappa_f=complex(kappa_f), kappa_s=complex(kappa_s))

    @property
    def V_f(self) -> np.ndarray:
        return self.kappa_f * V

    @property
    def V_s(self) -> np.ndarray:
        return self.kappa_s * V


@dataclass(frozen=True)
class JumpRecord:
    times: tuple[float, ...]
    T: float

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DaviesError("click times must be strictly increasing")
        if ts and (ts[0] < 0 or ts[-1] >= self.T):
            raise DaviesError("click times must lie in [0, T)")
        object.__setattr__(self, "times", ts)


def contraction_exponent(p: RFParams) -> np.ndarray:
    """``K`` with ``B_t = exp(-K t)``."""
    return 0.5 * (abs(p.z) ** 2 * np.eye(2) + lo.dag(V) @ V + 2 * p.z * lo.dag(p.V_f))


def no_jump_contraction(p: RFParams, t: float) -> np.ndarray:
    """Closed form of ``exp(-K t)``, the amplitude propagator without any click."""
    if t < 0:
        raise DaviesError("t must be nonnegative")
    e = np.exp(-t / 2)
    off = 2 * p.z * np.conj(p.kappa_f) * (e - 1)
    return np.exp(-t * abs(p.z) ** 2 / 2) * np.array([[e, off], [0, 1]], dtype=complex)


def jump_maps(p: RFParams) -> tuple[np.ndarray, np.ndarray]:
    """Forward and side jump superoperators ``(J_f, J_s)``."""
    Jf = lo.sandwich_op(p.z * np.eye(2) + p.V_f)
    Js = lo.sandwich_op(p.V_s)
    return Jf, Js


def smooth_generator(p: RFParams) -> np.ndarray:
    """Superoperator of ``rho -> -K rho - rho K^dag``."""
    K = contraction_exponent(p)
    return -lo.left_op(K) - lo.right_op(lo.dag(K))


def between_jumps_generator(p: RFParams) -> np.ndarray:
    return smooth_generator(p) + jump_maps(p)[0]


def between_jumps_map(p: RFParams, t: float) -> np.ndarray:
    """Unnormalized state map over a stretch of length ``t`` without side clicks."""
    if t < 0:
        raise DaviesError("t must be nonnegative")
    return lo.mat_exp(t * between_jumps_generator(p))


def full_generator(p: RFParams) -> np.ndarray:
    Jf, Js = jump_maps(p)
    return smooth_generator(p) + Jf + Js


def _start(rho0) -> np.ndarray:
    return lo.vec(np.asarray(lo.GROUND if rho0 is None else rho0, dtype=complex))


def exclusive_density(p: RFParams, record: JumpRecord | Sequence[float], rho0: np.ndarray,
                      T: float | None = None) -> float:
    """Density of seeing exactly the side clicks in ``record`` during ``[0, T)``."""
    if not isinstance(record, JumpRecord):
        record = JumpRecord(tuple(record), T)
    A = between_jumps_generator(p)
    Js = jump_maps(p)[1]
    v = _start(rho0)
    last = 0.0
    for t in record.times:
        v = Js @ (lo.mat_exp((t - last) * A) @ v)
        last = t
    v = lo.mat_exp((record.T - last) * A) @ v
    return float(max((lo.trace_functional(2) @ v).real, 0.0))


def click_number_probabilities(p: RFParams, T: float, K: int, rho0: np.ndarray | None = None,
                               ) -> np.ndarray:
    """Probabilities of exactly ``k = 0..K`` side clicks in ``[0, T)``.

    The iterated integrals over ordered click times are the blocks of one
    exponential of a block-bidiagonal generator.
    """
    A = between_jumps_generator(p)
    Js = jump_maps(p)[1]
    n = A.shape[0]
    B = np.zeros(((K + 1) * n, (K + 1) * n), complex)
    for k in range(K + 1):
        B[k * n:(k + 1) * n, k * n:(k + 1) * n] = A
        if k:
            B[k * n:(k + 1) * n, (k - 1) * n:k * n] = Js
    x = np.zeros((K + 1) * n, complex)
    x[:n] = _start(rho0)
    y = lo.mat_exp(T * B) @ x
    tv = lo.trace_functional(2)
    return np.array([(tv @ y[k * n:(k + 1) * n]).real for k in range(K + 1)])


class _Propagator:
    """``exp(t A) v`` for many ``t`` at once through an eigendecomposition of ``A``."""

    def __init__(self, A: np.ndarray):
        w, P = np.linalg.eig(A)
        if np.linalg.cond(P) > 1e8:
            raise DaviesError("between-click generator is too close to defective")
        self.w, self.P, self.Pinv = w, P, np.linalg.inv(P)

    def to_eig(self, v: np.ndarray) -> np.ndarray:
        return v @ self.Pinv.T

    def from_eig(self, c: np.ndarray) -> np.ndarray:
        return c @ self.P.T


def simplex_integral(p: RFParams, k: int, T: float, rho0: np.ndarray | None = None, *,
                     n_grid: int = 64, n_mc: int = 10**6, seed: int = 0) -> float:
    """Integral of :func:`exclusive_density` over all records with ``k`` clicks.

    Up to three clicks the nested time integrals use the trapezoid rule with
    ``n_grid`` intervals per dimension; beyond that Monte Carlo sampling of
    the ordered simplex is used with ``n_mc`` points.
    """
    A = between_jumps_generator(p)
    Js = jump_maps(p)[1]
    tv = lo.trace_functional(2)
    v0 = _start(rho0)
    if k == 0:
        return float((tv @ lo.mat_exp(T * A) @ v0).real)
    if k <= 3:
        h = T / n_grid
        step = lo.mat_exp(h * A)
        Z = np.empty((n_grid + 1, 4, 4), complex)
        Z[0] = np.eye(4)
        for i in range(1, n_grid + 1):
            Z[i] = step @ Z[i - 1]
        # part[i] = unnormalized state at grid time i having seen the clicks so far
        part = np.einsum("iab,b->ia", Z, v0)
        for _ in range(k):
            jumped = part @ Js.T
            nxt = np.zeros_like(part)
            for i in range(1, n_grid + 1):
                w = np.full(i + 1, h)
                w[0] = w[-1] = h / 2
                nxt[i] = np.einsum("j,jab,jb->a", w, Z[i::-1], jumped[: i + 1])
            part = nxt
        return float((part[-1] @ tv).real)
    prop = _Propagator(A)
    Js_eig = prop.Pinv @ Js @ prop.P
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))
    total = 0.0
    chunk = 100_000
    done = 0
    c0 = prop.to_eig(v0[None, :])
    while done < n_mc:
        m = min(chunk, n_mc - done)
        ts = np.sort(rng.random((m, k)) * T, axis=1)
        gaps = np.diff(np.concatenate([np.zeros((m, 1)), ts, np.full((m, 1), T)], axis=1), axis=1)
        c = np.broadcast_to(c0, (m, 4)).copy()
        for j in range(k):
            c = c * np.exp(gaps[:, j:j + 1] * prop.w)
            c = c @ Js_eig.T
        c = c * np.exp(gaps[:, k:k + 1] * prop.w)
        vals = (prop.from_eig(c) @ tv).real
        total += vals.sum()
        done += m
    return float(total / n_mc * T**k / factorial(k))


def normalization_sum(p: RFParams, T: float, K: int, rho0: np.ndarray | None = None,
                      **kw) -> float:
    """``sum_{k<=K}`` of the click-number integrals; close to one for small tails."""
    return float(sum(simplex_integral(p, k, T, rho0, **kw) for k in range(K + 1)))


def decay_rate(p: RFParams) -> float:
    """Slowest decay rate of the between-click map."""
    w = np.linalg.eigvals(between_jumps_generator(p))
    return float(np.min(np.abs(w.real)))


def x_max(p: RFParams) -> float:
    r = decay_rate(p)
    if r <= 1e-14:
        raise DaviesError("between-click map does not decay (|z| = 0?)")
    return 50.0 / r


def _interval_start(p: RFParams, first: bool, rho0) -> np.ndarray:
    if first:
        return _start(rho0)
    if abs(p.z) == 0:
        raise DaviesError("waiting-time law after a click needs |z| > 0")
    return lo.vec(lo.GROUND)


def waiting_time_density(p: RFParams, x, first: bool = False, rho0=None) -> np.ndarray:
    """Density of the time to the next side click, starting right after one (or at 0)."""
    x = np.asarray(x, dtype=float)
    A = between_jumps_generator(p)
    v = _interval_start(p, first, rho0)
    rate = lo.trace_functional(2) @ jump_maps(p)[1]
    out = np.array([(rate @ lo.mat_exp(xi * A) @ v).real for xi in x.ravel()])
    return out.reshape(x.shape)


def waiting_time_cdf(p: RFParams, x, first: bool = False, rho0=None) -> np.ndarray:
    """Cumulative distribution of the waiting time, exact up to round-off."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DaviesError("x must be nonnegative")
    A = between_jumps_generator(p)
    v = _interval_start(p, first, rho0)
    rate = lo.trace_functional(2) @ jump_maps(p)[1]
    aug = np.zeros((5, 5), complex)
    aug[:4, :4] = A
    aug[4, :4] = rate
    start = np.concatenate([v, [0]])
    out = np.array([(lo.mat_exp(xi * aug) @ start)[4].real for xi in x.ravel()])
    return np.clip(out.reshape(x.shape), 0.0, 1.0)


def cdf_table(p: RFParams, first: bool = False, rho0=None, n: int = 20001,
              upper: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Waiting-time CDF on a uniform grid, built by repeated one-step propagation."""
    upper = x_max(p) if upper is None else upper
    xs = np.linspace(0.0, upper, n)
    h = xs[1] - xs[0]
    aug = np.zeros((5, 5), complex)
    aug[:4, :4] = between_jumps_generator(p)
    aug[4, :4] = lo.trace_functional(2) @ jump_maps(p)[1]
    step = lo.mat_exp(h * aug)
    y = np.concatenate([_interval_start(p, first, rho0), [0]])
    F = np.empty(n)
    for i in range(n):
        F[i] = y[4].real
        y = step @ y
    return xs, np.maximum.accumulate(np.clip(F, 0, 1))


def sample_intervals(p: RFParams, m: int, seed: int = 0, first: bool = False,
                     rho0=None) -> np.ndarray:
    """Exact waiting-time samples by inverting the tabulated CDF."""
    xs, F = cdf_table(p, first, rho0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    u = rng.random(m) * F[-1]
    return np.interp(u, F, xs)
