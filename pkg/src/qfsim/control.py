"""Feedback that undoes the measurement backaction of diffusive filters.

After each block of duration ``tau`` the filtered state is rotated by
``exp(i Delta G)``, where ``Delta`` is the record increment over the block and
``G`` a Hermitian generator fixed by the measurement mode. In the limit of
fast correction the ensemble follows a reduced Lindblad generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linops as lo
from .filtering import FilterSpec
from .lindblad import GeneratorSpec, superop_from_generator
from .squeeze import SqueezeParams, effective_coupling, quadrature_parts
from .stats import EnsembleRun, run_ensemble

CONTROL_MODES = ("essentially_commutative", "unsqueezed_decay", "squeezed")


class ControlError(ValueError):
    pass


@dataclass(frozen=True)
class ControlScheme:
    """Measurement mode, correction period and whether to apply corrections."""

    mode: str
    tau: float
    squeeze: SqueezeParams | None = None
    correct: bool = True

    def __post_init__(self):
        if self.mode not in CONTROL_MODES:
            raise ControlError(f"unknown control mode {self.mode!r}")
        if not self.tau > 0:
            raise ControlError("tau must be positive")
        if self.mode == "squeezed" and self.squeeze is None:
            raise ControlError("squeezed control needs squeeze parameters")

    def filter_spec(self, dt: float, T: float) -> FilterSpec:
        return FilterSpec(mode=self.mode, dt=dt, T=T, squeeze=self.squeeze)

    def steps_per_block(self, dt: float) -> int:
        m = self.tau / dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m) or round(m) < 1:
            raise ControlError(f"tau/dt = {m!r} must be a positive integer")
        return int(round(m))


def _side(gen: GeneratorSpec) -> np.ndarray:
    if gen.side is None:
        raise ControlError("generator has no side coupling")
    return gen.couplings[gen.side]


def correction_generator(scheme: ControlScheme, gen: GeneratorSpec) -> np.ndarray:
    """Hermitian ``G`` such that the correction after increment ``Delta`` is ``exp(i Delta G)``."""
    Vs = _side(gen)
    if scheme.mode == "essentially_commutative":
        if np.allclose(Vs, lo.dag(Vs)):
            return Vs.copy()
        if np.allclose(Vs, -lo.dag(Vs)):
            return 1j * Vs
        raise ControlError("side coupling is neither self-adjoint nor skew-adjoint")
    if scheme.mode == "unsqueezed_decay":
        return quadrature_parts(Vs)[0]
    eff = effective_coupling(scheme.squeeze, gen)
    return -eff.W_I / np.sqrt(scheme.squeeze.s)


def correction_unitary(scheme: ControlScheme, gen: GeneratorSpec, delta: float) -> np.ndarray:
    w, P = np.linalg.eigh(correction_generator(scheme, gen))
    return (P * np.exp(1j * delta * w)) @ lo.dag(P)


def effective_generator(scheme: ControlScheme, gen: GeneratorSpec) -> GeneratorSpec:
    """Generator followed by the ensemble in the limit ``tau -> 0``."""
    Vs = _side(gen)
    cs = [] if gen.forward is None else [gen.couplings[gen.forward]]
    if scheme.mode == "unsqueezed_decay":
        cs.append(quadrature_parts(Vs)[1])
    elif scheme.mode == "squeezed":
        cs.append(quadrature_parts(Vs)[0] / np.sqrt(scheme.squeeze.s))
    if not cs:
        cs = [np.zeros_like(Vs)]
    fwd = 0 if gen.forward is not None else None
    return GeneratorSpec(H=gen.H, couplings=tuple(cs), forward=fwd, side=None,
                         drive=gen.drive if fwd is not None else None,
                         meta=dict(gen.meta, control=scheme.mode))


@dataclass
class ControlledRun:
    """States sampled right after each correction, starting with the initial state."""

    times: np.ndarray
    states: np.ndarray
    record: np.ndarray
    seed: int
    index: int


def run_control_loop(scheme: ControlScheme, gen: GeneratorSpec, rho0: np.ndarray, T: float,
                     dt: float, seed: int, index: int = 0) -> ControlledRun:
    """One controlled trajectory. With ``correct=False`` this is the plain filter sampled every ``tau``."""
    from .filtering import run_batch

    m = scheme.steps_per_block(dt)
    spec = scheme.filter_spec(dt, T)
    G = correction_generator(scheme, gen) if scheme.correct else None
    res = run_batch(spec, gen, rho0, seed, [index], save_every=m, keep_states=True,
                    keep_records=True, correction=G, correct_every=m)
    d = gen.dim
    return ControlledRun(times=res.times, states=lo.unvec(res.states[:, 0, :]).reshape(-1, d, d),
                         record=res.records[0], seed=int(seed), index=int(index))


def run_control_ensemble(scheme: ControlScheme, gen: GeneratorSpec, rho0: np.ndarray, T: float,
                         dt: float, n: int, seed: int, **kw) -> EnsembleRun:
    """Ensemble of controlled trajectories sampled every ``tau``.

    ``distance_mean`` of the result holds each run's time-averaged trace
    distance to ``rho0``.
    """
    m = scheme.steps_per_block(dt)
    G = correction_generator(scheme, gen) if scheme.correct else None
    return run_ensemble(scheme.filter_spec(dt, T), gen, rho0, n, seed, save_every=m,
                        correction=G, correct_every=m, distance_to=rho0, **kw)


def _time_average(times: np.ndarray, values: np.ndarray) -> float:
    span = times[-1] - times[0]
    if span <= 0:
        return float(values[0])
    return float(np.sum(0.5 * np.diff(times) * (values[1:] + values[:-1])) / span)


def freezing_error(run, rho0: np.ndarray) -> float:
    """Time-averaged trace distance to ``rho0`` (trapezoid rule on the run's grid).

    ``run`` is anything with ``times`` and ``states``, such as a
    :class:`ControlledRun` or a :class:`qfsim.filtering.Trajectory`.
    """
    return states_freezing_error(run.times, run.states, rho0)


def states_freezing_error(times: np.ndarray, states: np.ndarray, rho0: np.ndarray) -> float:
    return _time_average(np.asarray(times), lo.trace_distance(states, rho0))


def ensemble_freezing_error(run: EnsembleRun, rho0: np.ndarray) -> float:
    """Freezing error of the ensemble-mean state."""
    return states_freezing_error(run.summary.times, run.summary.mean, rho0)


def tracking_error(run: EnsembleRun, gen_eff: GeneratorSpec, rho0: np.ndarray) -> np.ndarray:
    """Entrywise deviation of the ensemble mean from ``exp(t L_eff) rho0`` on the saved grid."""
    S = superop_from_generator(gen_eff)
    times = run.summary.times
    exact = np.stack([lo.apply(lo.mat_exp(t * S), rho0) for t in times])
    return np.abs(run.summary.mean - exact)


# ------------------------------------------------------------ pulse picture


def pulse_amplitude(scheme: ControlScheme, gen: GeneratorSpec, delta: float) -> complex:
    """Integrated forward-channel laser amplitude ``A`` that implements the correction.

    A short pulse ``h`` with integral ``A`` acts as ``exp(conj(A) V_f - A V_f^dag)``
    on both sides; ``A`` is chosen so this equals ``exp(i delta G)``.
    """
    if gen.forward is None:
        raise ControlError("generator has no forward coupling")
    Vf = gen.couplings[gen.forward]
    target = 1j * delta * correction_generator(scheme, gen)
    # conj(A) Vf - A Vf^dag = a (Vf - Vf^dag) - i b (Vf + Vf^dag) with A = a + i b
    basis = np.stack([(Vf - lo.dag(Vf)).ravel(), (-1j * (Vf + lo.dag(Vf))).ravel()], axis=1)
    M = np.concatenate([basis.real, basis.imag])
    rhs = np.concatenate([target.ravel().real, target.ravel().imag])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.linalg.norm(M @ sol - rhs) > 1e-10 * max(1.0, np.linalg.norm(rhs)):
        raise ControlError("correction is not reachable through the forward channel")
    return complex(sol[0], sol[1])


def apply_pulse(gen: GeneratorSpec, rho: np.ndarray, amplitude: complex, width: float) -> np.ndarray:
    """Evolve ``rho`` for ``width`` under the generator with constant drive ``amplitude/width``."""
    from .lindblad import laser_modified_generator

    pulsed = laser_modified_generator(gen, amplitude / width)
    return lo.apply(lo.mat_exp(width * superop_from_generator(pulsed)), rho)
