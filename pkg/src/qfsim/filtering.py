"""Quantum filters for counting, homodyne-type and squeezed-quadrature detection.

States are propagated in column-stacked form, one row per trajectory, so a
whole ensemble advances with a handful of small matrix products per step.

Three integration schemes are available. ``"kraus"`` writes each no-click or
diffusive step as ``M rho M^dag`` plus the unobserved jump terms, with ``M``
expanded to second order in the record increment; it keeps states positive and
converges with strong order one. ``"euler"`` is the plain Euler-Maruyama
update of the normalized filter equation. ``"binned"`` (counting modes only)
uses the exact no-click propagator ``exp(dt (L - J))`` and its complement
``exp(dt L) - exp(dt (L - J))`` for "at least one click in the bin"; the
ensemble mean is then exact for any ``dt``. It is the default for
local-oscillator counting, whose click rate ``1/eps^2`` makes one-click-per-step
schemes biased; every other mode defaults to ``"kraus"``.

Random numbers come from one Philox stream per trajectory, keyed by the
master seed and the trajectory index. Counting modes draw one uniform per
step (``Generator.random``); diffusive modes draw one standard normal per step
(``Generator.standard_normal``) scaled by ``sqrt(dt)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linops as lo
from .lindblad import GeneratorSpec, lindblad_superop, superop_from_generator
from .squeeze import SqueezeParams, effective_coupling, quadrature_parts

COUNTING_MODES = ("counting", "lo_counting")
DIFFUSIVE_MODES = ("homodyne", "squeezed", "essentially_commutative", "unsqueezed_decay")
MODES = COUNTING_MODES + DIFFUSIVE_MODES
SCHEMES = ("kraus", "euler", "binned")

JUMP_GUARD = 0.1
NOISE_BLOCK = 1024


class FilterError(ValueError):
    pass


class NumericGuardError(FilterError):
    """A step violated an accuracy guard (jump probability per step too large).

    ``column`` is the offending batch column; :func:`run_batch` adds ``step``,
    ``trajectory`` and ``state``.
    """

    def __init__(self, msg: str, column: int = 0, step: int | None = None,
                 trajectory: int | None = None, state: np.ndarray | None = None):
        super().__init__(msg)
        self.column = column
        self.step = step
        self.trajectory = trajectory
        self.state = state


@dataclass(frozen=True)
class FilterSpec:
    mode: str
    dt: float
    T: float
    eps: float | None = None
    phi0: float = 0.0
    omega_lo: float = 0.0
    squeeze: SqueezeParams | None = None
    channel: int | None = None
    scheme: str | None = None

    def __post_init__(self):
        if self.scheme is None:
            object.__setattr__(self, "scheme", "binned" if self.mode == "lo_counting" else "kraus")
        if self.mode not in MODES:
            raise FilterError(f"unknown mode {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise FilterError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "binned" and self.mode not in COUNTING_MODES:
            raise FilterError("the binned scheme applies to counting modes only")
        if not self.dt > 0:
            raise FilterError("dt must be positive")
        if self.T < 0:
            raise FilterError("T must be nonnegative")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise FilterError(f"T/dt = {steps!r} is not an integer")
        if self.mode == "lo_counting" and not (self.eps is not None and self.eps > 0):
            raise FilterError("lo_counting needs eps > 0")
        if self.mode == "squeezed":
            if self.squeeze is None:
                raise FilterError("squeezed mode needs squeeze parameters")
            if not self.squeeze.real_c:
                raise FilterError("squeezed filtering requires real c")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def kind(self) -> str:
        return "counting" if self.mode in COUNTING_MODES else "diffusive"

    def phase(self, t: float) -> float:
        return self.phi0 + self.omega_lo * t


@dataclass
class MeasurementRecord:
    """Per-step increments; ``values[k]`` is the increment over ``[k dt, (k+1) dt)``."""

    kind: str
    dt: float
    T: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = int(round(self.T / self.dt))
        if self.values.shape != (n,):
            raise FilterError(f"record has {self.values.shape} values, expected {n}")
        if self.kind == "counting" and not np.all((self.values == 0) | (self.values == 1)):
            raise FilterError("counting increments must be 0 or 1")

    @property
    def times(self) -> np.ndarray:
        """End time of each increment."""
        return self.dt * np.arange(1, len(self.values) + 1)

    def click_times(self) -> np.ndarray:
        if self.kind != "counting":
            raise FilterError("not a counting record")
        return self.times[self.values == 1]


@dataclass
class Trajectory:
    record: MeasurementRecord
    states: np.ndarray
    seed: int
    index: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.record.dt * np.arange(self.states.shape[0])


# ---------------------------------------------------------------- helpers


def _tvec(A: np.ndarray) -> np.ndarray:
    """Row functional with ``vec(rho) @ out == trace(A rho)``."""
    return lo.vec(np.asarray(A).T)


def _transpose_perm(d: int) -> np.ndarray:
    idx = np.arange(d * d)
    i, j = idx % d, idx // d
    return j + d * i


def measured_operator(spec: FilterSpec, gen: GeneratorSpec, t: float = 0.0) -> np.ndarray:
    """The operator ``C`` whose quadrature ``C + C^dag`` drives the diffusive record."""
    ch = gen.side if spec.channel is None else spec.channel
    if ch is None:
        raise FilterError("no measured channel")
    Vs = gen.effective_couplings(t)[ch]
    mode = spec.mode
    if mode == "homodyne":
        return np.exp(-1j * spec.phase(t)) * Vs
    if mode == "unsqueezed_decay":
        return -1j * Vs
    if mode == "essentially_commutative":
        if np.allclose(Vs, lo.dag(Vs), atol=1e-12):
            return -1j * Vs
        if np.allclose(Vs, -lo.dag(Vs), atol=1e-12):
            return Vs
        raise FilterError("essentially commutative mode needs a self-adjoint or skew coupling")
    if mode == "squeezed":
        return effective_coupling(spec.squeeze, gen).V_nc
    raise FilterError(f"{mode} has no diffusive measurement operator")


def ensemble_generator(spec: FilterSpec, gen: GeneratorSpec) -> GeneratorSpec:
    """Generator the ensemble mean of the filter follows."""
    if spec.mode == "squeezed":
        return effective_coupling(spec.squeeze, gen).generator
    return gen


def _check_unsqueezed(gen: GeneratorSpec, ch: int) -> None:
    VR, VI = quadrature_parts(gen.couplings[ch])
    if not np.allclose(VR @ VI + VI @ VR, 0, atol=1e-12):
        raise FilterError("unsqueezed decay scheme needs anticommuting quadratures")


@dataclass
class _Ops:
    # diffusive: stacked powers of the increment; counting: jump / no-jump maps
    stack: np.ndarray | None = None
    n_pow: int = 0
    drift: np.ndarray | None = None
    jump: np.ndarray | None = None
    nojump: np.ndarray | None = None
    rate: np.ndarray | None = None
    click_prob: np.ndarray | None = None
    euler_full: np.ndarray | None = None
    euler_gain: np.ndarray | None = None
    euler_smooth: np.ndarray | None = None


class _Kernel:
    """Per-(spec, generator) precomputation of the step maps."""

    def __init__(self, spec: FilterSpec, gen: GeneratorSpec):
        self.spec = spec
        self.gen = gen
        self.d = gen.dim
        self.ch = gen.side if spec.channel is None else spec.channel
        if self.ch is None or not 0 <= self.ch < len(gen.couplings):
            raise FilterError("invalid measured channel")
        if spec.mode == "unsqueezed_decay":
            _check_unsqueezed(gen, self.ch)
        if spec.mode == "essentially_commutative":
            measured_operator(spec, gen)
        self.scale = np.sqrt(spec.squeeze.s) if spec.mode == "squeezed" else 1.0
        self.lgen = ensemble_generator(spec, gen)
        self.static = not gen.time_dependent and not (
            spec.mode in ("homodyne", "lo_counting") and spec.omega_lo != 0)
        self._cache: _Ops | None = None
        self.tv = lo.trace_functional(self.d)
        self.perm = _transpose_perm(self.d)

    def ops(self, t: float) -> _Ops:
        if self.static and self._cache is not None:
            return self._cache
        o = self._build(t)
        if self.static:
            self._cache = o
        return o

    def _build(self, t: float) -> _Ops:
        spec, d, dt = self.spec, self.d, self.spec.dt
        eye = np.eye(d, dtype=complex)
        cs = list(self.lgen.effective_couplings(t))
        H = self.lgen.effective_hamiltonian(t)
        if spec.mode == "lo_counting":
            beta = np.exp(1j * spec.phase(t)) / spec.eps
            Vs = cs[self.ch]
            H = H - 0.5j * (np.conj(beta) * Vs - beta * lo.dag(Vs))
            C = Vs + beta * eye
        elif spec.mode == "counting":
            C = cs[self.ch]
        else:
            C = measured_operator(spec, self.gen, t)
        unobs = [c for k, c in enumerate(cs) if k != self.ch]
        K = 1j * H + 0.5 * lo.dag(C) @ C
        for L in unobs:
            K = K + 0.5 * lo.dag(L) @ L
        side_jumps = sum((lo.sandwich_op(L) for L in unobs), np.zeros((d * d, d * d), complex))
        o = _Ops()
        if spec.kind == "counting":
            o.rate = _tvec(lo.dag(C) @ C)
            o.jump = lo.sandwich_op(C)
            if spec.scheme == "binned":
                full = lindblad_superop(H, cs[:self.ch] + [C] + cs[self.ch + 1:])
                o.nojump = lo.mat_exp(dt * (full - o.jump))
                o.jump = lo.mat_exp(dt * full) - o.nojump
                o.click_prob = lo.trace_functional(d) @ o.jump
            elif spec.scheme == "kraus":
                M0 = eye - K * dt
                o.nojump = lo.sandwich_op(M0) + dt * side_jumps
            else:
                full = lindblad_superop(H, cs[:self.ch] + [C] + cs[self.ch + 1:])
                o.euler_smooth = np.eye(d * d) + dt * (full - lo.sandwich_op(C))
            return o
        o.drift = _tvec(C + lo.dag(C))
        if spec.scheme == "kraus":
            A = [eye - (K + 0.5 * C @ C) * dt, C, 0.5 * C @ C]
            mats = []
            for p in range(5):
                T_p = np.zeros((d * d, d * d), complex)
                for j in range(3):
                    k = p - j
                    if 0 <= k < 3:
                        T_p = T_p + np.kron(np.conj(A[k]), A[j])
                if p == 0:
                    T_p = T_p + dt * side_jumps
                mats.append(T_p)
            o.n_pow = 5
            o.stack = np.concatenate(mats, axis=0)
        else:
            o.euler_full = np.eye(d * d) + dt * superop_from_generator(self.lgen, t)
            o.euler_gain = lo.left_op(C) + lo.right_op(lo.dag(C))
        return o

    # -- states are columns of column-stacked matrices, shape (d*d, n)
    def normalize(self, v: np.ndarray) -> np.ndarray:
        v = 0.5 * (v + np.conj(v[self.perm]))
        tr = (self.tv @ v).real
        return v / tr

    def step(self, v: np.ndarray, t: float, noise: np.ndarray | None,
             given: np.ndarray | None = None):
        """Advance every column by one step.

        ``noise`` holds uniforms (counting) or standard normals (diffusive);
        ``given`` replays record increments instead. Returns the new rows,
        the raw record increments and the innovations.
        """
        o = self.ops(t)
        dt = self.spec.dt
        if self.spec.kind == "counting":
            if o.click_prob is not None:
                p = (o.click_prob @ v).real
            else:
                p = (o.rate @ v).real * dt
            if np.max(p, initial=0.0) > JUMP_GUARD:
                raise NumericGuardError(f"jump probability per step {np.max(p):.3g} exceeds {JUMP_GUARD}",
                                        column=int(np.argmax(p)))
            if given is None:
                dN = (noise < p).astype(float)
            else:
                dN = np.asarray(given, dtype=float)
                if np.any((dN == 1) & (p <= 0)):
                    raise FilterError("record demands a click where the click rate is zero")
            jumped = dN == 1
            if o.nojump is not None:
                out = o.nojump @ v
            else:
                out = o.euler_smooth @ v + p * v
            if np.any(jumped):
                out[:, jumped] = o.jump @ v[:, jumped]
            return self.normalize(out), dN, dN - p
        m = (o.drift @ v).real
        if given is None:
            dW = noise * np.sqrt(dt)
            dy = m * dt + dW
        else:
            dy = np.asarray(given, dtype=float) / self.scale
            dW = dy - m * dt
        if o.stack is not None:
            parts = (o.stack @ v).reshape(o.n_pow, v.shape[0], -1)
            out = parts[-1] * dy
            for q in range(o.n_pow - 2, 0, -1):
                out += parts[q]
                out *= dy
            out += parts[0]
        else:
            gain = o.euler_gain @ v - m * v
            out = o.euler_full @ v + gain * dW
        return self.normalize(out), self.scale * dy, self.scale * dW


class _Noise:
    """Blocks of per-trajectory random numbers from independent Philox streams."""

    def __init__(self, seed: int, indices: Sequence[int], kind: str, block: int = NOISE_BLOCK):
        self.gens = [np.random.Generator(np.random.Philox(
            np.random.SeedSequence(int(seed), spawn_key=(int(i),)))) for i in indices]
        self.kind = kind
        self.block = block
        self.buf = np.empty((len(self.gens), 0))
        self.pos = 0

    def next(self) -> np.ndarray:
        if self.pos >= self.buf.shape[1]:
            if self.kind == "counting":
                self.buf = np.stack([g.random(self.block) for g in self.gens])
            else:
                self.buf = np.stack([g.standard_normal(self.block) for g in self.gens])
            self.pos = 0
        col = self.buf[:, self.pos]
        self.pos += 1
        return col


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """The random stream used for trajectory ``index`` under master seed ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


@dataclass
class BatchResult:
    """Output of :func:`run_batch`."""

    times: np.ndarray
    total: np.ndarray
    sq_re: np.ndarray  # sums of squared deviations from the batch mean
    sq_im: np.ndarray
    n: int
    final: np.ndarray
    seed: int
    indices: np.ndarray
    states: np.ndarray | None = None
    records: np.ndarray | None = None
    innovation_sum: np.ndarray | None = None
    martingale: dict = field(default_factory=dict)
    click_times: list | None = None
    distance_mean: np.ndarray | None = None
    kind: str = "counting"


def _as_rows(rho0: np.ndarray, n: int, d: int) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape == (d, d):
        rho0 = np.broadcast_to(rho0, (n, d, d))
    if rho0.shape != (n, d, d):
        raise FilterError(f"initial state shape {rho0.shape} incompatible with {n} trajectories")
    return np.ascontiguousarray(lo.vec(rho0).T)


def run_batch(spec: FilterSpec, gen: GeneratorSpec, rho0: np.ndarray, seed: int,
              indices: Sequence[int], *, save_every: int = 1, keep_states: bool = False,
              keep_records: bool = False, observables: Sequence[np.ndarray] = (),
              replay: np.ndarray | None = None, correction: np.ndarray | None = None,
              correct_every: int = 1, distance_to: np.ndarray | None = None,
              until_clicks: int | None = None, max_steps: int | None = None) -> BatchResult:
    """Propagate the trajectories ``indices`` together.

    ``correction`` is a Hermitian ``G``; every ``correct_every`` steps each
    trajectory is rotated by ``exp(i Delta G)`` where ``Delta`` is its raw
    record increment over the block. ``distance_to`` accumulates, per
    trajectory, the time average of the trace distance to that state over the
    saved grid. ``until_clicks`` keeps stepping past ``T`` until every
    trajectory has clicked that many times (counting modes only) and reports
    only those first clicks, so no waiting time is cut off by the stop.
    """
    indices = np.asarray(indices, dtype=np.int64)
    n, d = len(indices), gen.dim
    if n == 0:
        raise FilterError("no trajectories")
    ker = _Kernel(spec, gen)
    v = _as_rows(rho0, n, d)
    v = ker.normalize(v)
    dt = spec.dt
    n_steps = spec.n_steps
    if until_clicks is not None:
        if spec.kind != "counting":
            raise FilterError("until_clicks needs a counting mode")
        n_steps = max_steps if max_steps is not None else 10**9
    noise = None if replay is not None else _Noise(seed, indices, spec.kind)
    if replay is not None:
        replay = np.atleast_2d(np.asarray(replay, dtype=float))
        if replay.shape != (n, spec.n_steps):
            raise FilterError(f"replayed record shape {replay.shape}, expected {(n, spec.n_steps)}")

    save_idx = list(range(0, spec.n_steps + 1, save_every))
    if until_clicks is None and save_idx[-1] != spec.n_steps:
        save_idx.append(spec.n_steps)
    if until_clicks is not None:
        save_idx = [0]
    n_save = len(save_idx)
    totals = np.zeros((n_save, d * d), complex)
    sq_re = np.zeros((n_save, d * d))
    sq_im = np.zeros((n_save, d * d))
    states = np.empty((n_save, n, d * d), complex) if keep_states else None
    records = np.zeros((n, spec.n_steps)) if keep_records and until_clicks is None else None
    innov = np.zeros(n)
    clicks: list[list[float]] | None = [[] for _ in range(n)] if spec.kind == "counting" else None

    obs = [np.asarray(X, dtype=complex) for X in observables]
    obs_f = np.stack([_tvec(X) for X in obs], axis=1) if obs else None
    mart_int = np.zeros((n, len(obs)))
    static_L = not ker.lgen.time_dependent
    L_dual = None

    def generator_functional(t: float) -> np.ndarray:
        S = superop_from_generator(ker.lgen, t)
        return S.T @ obs_f

    if obs:
        L_dual = generator_functional(0.0)
        prev_g = (L_dual.T @ v).real.T
        f0 = (obs_f.T @ v).real.T

    dist_ref = None
    if distance_to is not None:
        dist_ref = np.asarray(distance_to, dtype=complex)
        dist_acc = np.zeros(n)
        prev_dist = lo.trace_distance(lo.unvec(v.T), dist_ref)
        dist_t_prev = 0.0

    if correction is not None:
        gw, gP = np.linalg.eigh(np.asarray(correction, dtype=complex))
        to_eig = lo.sandwich_op(lo.dag(gP))
        from_eig = lo.sandwich_op(gP)
        # in the eigenbasis of G the rotation multiplies entry (a, b) by exp(i Delta (w_a - w_b))
        wdiff = lo.vec(gw[:, None] - gw[None, :]).real
        block_delta = np.zeros(n)

    def record_save(slot: int):
        total = v.sum(axis=1)
        centered = v - (total / n)[:, None]
        totals[slot] = total
        sq_re[slot] = (centered.real ** 2).sum(axis=1)
        sq_im[slot] = (centered.imag ** 2).sum(axis=1)
        if states is not None:
            states[slot] = v.T

    record_save(0)
    slot = 1
    counts = np.zeros(n, dtype=np.int64)
    k = 0
    while k < n_steps:
        if until_clicks is not None and np.all(counts >= until_clicks):
            break
        t = k * dt
        z = noise.next() if noise is not None else None
        given = replay[:, k] if replay is not None else None
        try:
            v, inc, inn = ker.step(v, t, z, given)
        except NumericGuardError as exc:
            state = lo.unvec(v[:, exc.column])
            raise NumericGuardError(f"{exc} at step {k} (t={t!r}), trajectory "
                                    f"{int(indices[exc.column])}, state {state.tolist()}",
                                    exc.column, k, int(indices[exc.column]), state) from None
        innov += inn
        if records is not None:
            records[:, k] = inc
        if clicks is not None:
            hit = np.nonzero(inc == 1)[0]
            for i in hit:
                clicks[i].append((k + 1) * dt)
            counts += inc.astype(np.int64)
        if correction is not None:
            block_delta += inc
            if (k + 1) % correct_every == 0:
                phase = np.exp(1j * wdiff[:, None] * block_delta[None, :])
                v = ker.normalize(from_eig @ (phase * (to_eig @ v)))
                block_delta[:] = 0.0
        k += 1
        if obs:
            if not static_L:
                L_dual = generator_functional(k * dt)
            g = (L_dual.T @ v).real.T
            mart_int += 0.5 * dt * (prev_g + g)
            prev_g = g
        if slot < n_save and k == save_idx[slot]:
            record_save(slot)
            if dist_ref is not None:
                dd = lo.trace_distance(lo.unvec(v.T), dist_ref)
                tk = k * dt
                dist_acc += 0.5 * (tk - dist_t_prev) * (prev_dist + dd)
                prev_dist, dist_t_prev = dd, tk
            slot += 1

    times = dt * np.asarray(save_idx[:slot], dtype=float)
    res = BatchResult(times=times, total=totals[:slot], sq_re=sq_re[:slot], sq_im=sq_im[:slot], n=n,
                      final=lo.unvec(v.T), seed=int(seed), indices=indices,
                      states=None if states is None else states[:slot],
                      records=records, innovation_sum=innov, kind=spec.kind)
    if obs:
        fT = (obs_f.T @ v).real.T
        res.martingale = {i: fT[:, i] - f0[:, i] - mart_int[:, i] for i in range(len(obs))}
    if clicks is not None:
        # beyond the first until_clicks clicks a run is cut off by the common stop time
        keep = slice(None) if until_clicks is None else slice(until_clicks)
        res.click_times = [np.asarray(c[keep]) for c in clicks]
    if dist_ref is not None:
        span = dist_t_prev if dist_t_prev > 0 else 1.0
        res.distance_mean = dist_acc / span if dist_t_prev > 0 else prev_dist
    return res


# ---------------------------------------------------------- single steps


def _single(rho):
    rho = np.asarray(rho, dtype=complex)
    return rho.ndim == 2, rho if rho.ndim == 3 else rho[None]


def _step_api(spec: FilterSpec, gen: GeneratorSpec, rho, t, noise, given):
    single, batch = _single(rho)
    ker = _Kernel(spec, gen)
    v = ker.normalize(np.ascontiguousarray(lo.vec(batch).T))
    z = None if noise is None else np.atleast_1d(np.asarray(noise, dtype=float))
    g = None if given is None else np.atleast_1d(np.asarray(given, dtype=float))
    v2, inc, _ = ker.step(v, t, z, g)
    out = lo.unvec(v2.T)
    if single:
        return out[0], float(inc[0])
    return out, inc


def counting_step(gen: GeneratorSpec, rho, dt: float, draw=None, *, dN=None, t: float = 0.0,
                  channel: int | None = None, scheme: str | None = None):
    """One step of the photon-counting filter; returns ``(rho', dN)``.

    Give either ``draw`` (uniform in [0, 1)) or a replayed ``dN``.
    """
    spec = FilterSpec("counting", dt, dt, channel=channel, scheme=scheme)
    return _step_api(spec, gen, rho, t, draw, dN)


def lo_counting_step(gen: GeneratorSpec, rho, dt: float, eps: float, w: complex, draw=None, *,
                     dN=None, t: float = 0.0, channel: int | None = None,
                     scheme: str | None = None):
    """Counting after mixing the side channel with a local oscillator of amplitude ``w / eps``."""
    if abs(abs(w) - 1) > 1e-12:
        raise FilterError("w must have unit modulus")
    spec = FilterSpec("lo_counting", dt, dt, eps=eps, phi0=float(np.angle(w)), channel=channel,
                      scheme=scheme)
    return _step_api(spec, gen, rho, t, draw, dN)


def homodyne_step(gen: GeneratorSpec, rho, dt: float, phi: float, dW=None, *, dY=None,
                  t: float = 0.0, channel: int | None = None, scheme: str | None = None):
    """One homodyne step at local-oscillator phase ``phi``; returns ``(rho', dY)``."""
    spec = FilterSpec("homodyne", dt, dt, phi0=phi, channel=channel, scheme=scheme)
    return _step_api(spec, gen, rho, t, None if dW is None else np.asarray(dW) / np.sqrt(dt), dY)


def squeezed_step(gen: GeneratorSpec, rho, dt: float, sq: SqueezeParams, dW=None, *, dY=None,
                  t: float = 0.0, channel: int | None = None, scheme: str | None = None):
    """Filter step for the amplified quadrature of squeezed noise; ``dY`` has variance ``s dt``."""
    spec = FilterSpec("squeezed", dt, dt, squeeze=sq, channel=channel, scheme=scheme)
    return _step_api(spec, gen, rho, t, None if dW is None else np.asarray(dW) / np.sqrt(dt), dY)


def essentially_commutative_step(gen: GeneratorSpec, rho, dt: float, dW=None, *, dY=None,
                                 t: float = 0.0, channel: int | None = None,
                                 scheme: str | None = None):
    """Filter for a (skew-)self-adjoint side coupling; the record carries no drift."""
    spec = FilterSpec("essentially_commutative", dt, dt, channel=channel, scheme=scheme)
    return _step_api(spec, gen, rho, t, None if dW is None else np.asarray(dW) / np.sqrt(dt), dY)


def unsqueezed_decay_step(gen: GeneratorSpec, rho, dt: float, dW=None, *, dY=None,
                          t: float = 0.0, channel: int | None = None,
                          scheme: str | None = None):
    """Filter observing the quadrature driven by ``2 tr(rho V_I)`` of the side coupling."""
    spec = FilterSpec("unsqueezed_decay", dt, dt, channel=channel, scheme=scheme)
    return _step_api(spec, gen, rho, t, None if dW is None else np.asarray(dW) / np.sqrt(dt), dY)


# ----------------------------------------------------------- trajectories


def simulate_trajectory(spec: FilterSpec, gen: GeneratorSpec, rho0: np.ndarray, seed: int,
                        index: int = 0) -> Trajectory:
    """Sample one filtered trajectory; a pure function of its arguments."""
    res = run_batch(spec, gen, rho0, seed, [index], keep_states=True, keep_records=True)
    rec = MeasurementRecord(spec.kind, spec.dt, spec.T, res.records[0])
    return Trajectory(record=rec, states=lo.unvec(res.states[:, 0]), seed=int(seed), index=index)


def filter_record(spec: FilterSpec, gen: GeneratorSpec, rho0: np.ndarray,
                  record: MeasurementRecord) -> Trajectory:
    """Run the filter on a supplied record instead of sampling one."""
    if record.dt != spec.dt or record.values.shape != (spec.n_steps,):
        raise FilterError("record grid does not match the filter spec")
    res = run_batch(spec, gen, rho0, 0, [0], keep_states=True, keep_records=True,
                    replay=record.values[None])
    return Trajectory(record=record, states=lo.unvec(res.states[:, 0]), seed=-1)


def scaled_lo_record(values: np.ndarray, eps: float, dt: float) -> np.ndarray:
    """Centered and rescaled local-oscillator counts ``eps dN - dt / eps``."""
    return eps * np.asarray(values, dtype=float) - dt / eps
