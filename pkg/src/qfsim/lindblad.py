"""Lindblad generators, their jump/smooth splitting and exact propagation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from . import linops as lo

Drive = Union[None, complex, Callable[[float], complex]]

KAPPA_TOL = 1e-12
HERMITIAN_TOL = 1e-10


class GeneratorError(ValueError):
    """Raised for invalid generator data."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Hamiltonian plus coupling operators of a Lindblad generator.

    ``drive`` is a laser amplitude ``h`` (a constant or a function of time)
    that displaces the coupling at index ``forward``. ``side`` marks the
    channel that detectors look at.
    """

    H: np.ndarray
    couplings: tuple[np.ndarray, ...]
    forward: int | None = None
    side: int | None = None
    drive: Drive = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise GeneratorError(f"H must be square, got {H.shape}")
        if not np.allclose(H, H.conj().T, atol=HERMITIAN_TOL):
            raise GeneratorError("H is not Hermitian")
        cs = tuple(np.asarray(c, dtype=complex) for c in self.couplings)
        for c in cs:
            if c.shape != H.shape:
                raise GeneratorError(f"coupling shape {c.shape} does not match H {H.shape}")
        for name in ("forward", "side"):
            idx = getattr(self, name)
            if idx is not None and not 0 <= idx < len(cs):
                raise GeneratorError(f"{name} index {idx} out of range")
        if self.drive is not None and self.forward is None:
            raise GeneratorError("a drive needs a designated forward coupling")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "couplings", cs)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def time_dependent(self) -> bool:
        return callable(self.drive)

    def drive_at(self, t: float) -> complex:
        if self.drive is None:
            return 0j
        if callable(self.drive):
            return complex(self.drive(t))
        return complex(self.drive)

    def effective_hamiltonian(self, t: float = 0.0) -> np.ndarray:
        """``H + (i/2)(conj(h) V_f - h V_f^dag)``; equals ``H`` without drive."""
        h = self.drive_at(t)
        if h == 0:
            return self.H
        vf = self.couplings[self.forward]
        return self.H + 0.5j * (np.conj(h) * vf - h * lo.dag(vf))

    def effective_couplings(self, t: float = 0.0) -> tuple[np.ndarray, ...]:
        """Couplings with the forward one displaced by ``h(t)``."""
        h = self.drive_at(t)
        if h == 0:
            return self.couplings
        cs = list(self.couplings)
        cs[self.forward] = cs[self.forward] + h * np.eye(self.dim)
        return tuple(cs)


@dataclass(frozen=True)
class UnraveledGenerator:
    smooth: np.ndarray
    jump: np.ndarray


def _check_kappas(kappa_f: complex, kappa_s: complex) -> None:
    total = abs(kappa_f) ** 2 + abs(kappa_s) ** 2
    if abs(total - 1.0) > KAPPA_TOL:
        raise GeneratorError(f"|kappa_f|^2 + |kappa_s|^2 = {total!r}, expected 1")


def make_decay_generator(kappa_f: complex, kappa_s: complex,
                         V: np.ndarray | None = None,
                         H: np.ndarray | None = None) -> GeneratorSpec:
    """Coupling ``V`` split into a forward part ``kappa_f V`` and a side part ``kappa_s V``."""
    _check_kappas(kappa_f, kappa_s)
    V = lo.LOWERING if V is None else np.asarray(V, dtype=complex)
    H = np.zeros_like(V) if H is None else H
    return GeneratorSpec(H=H, couplings=(kappa_f * V, kappa_s * V), forward=0, side=1,
                         meta={"kappa_f": complex(kappa_f), "kappa_s": complex(kappa_s), "V": V})


def laser_amplitude(omega: float, kappa_f: complex) -> complex:
    """Coherent amplitude in the forward channel that produces Rabi frequency ``omega``."""
    return -0.5j * omega / np.conj(kappa_f)


def make_rf_generator(omega: float, kappa_f: complex, kappa_s: complex) -> GeneratorSpec:
    """Resonantly driven two-level atom with forward and side decay channels.

    The Schrodinger action is ``i omega/2 [V + V^dag, rho] + D_V(rho)`` with
    ``V`` the lowering operator. The drive is carried as a displacement of the
    forward coupling, so the bare Hamiltonian is zero.
    """
    _check_kappas(kappa_f, kappa_s)
    if omega != 0 and kappa_f == 0:
        raise GeneratorError("a nonzero Rabi frequency needs kappa_f != 0")
    gen = make_decay_generator(kappa_f, kappa_s)
    if omega == 0:
        return gen
    z = laser_amplitude(omega, kappa_f)
    meta = dict(gen.meta, omega=float(omega), z=z)
    return replace(gen, drive=z, meta=meta)


def laser_modified_generator(gen: GeneratorSpec, h: Drive) -> GeneratorSpec:
    """Attach the laser amplitude ``h`` (constant or callable) to the forward coupling."""
    if gen.forward is None:
        raise GeneratorError("generator has no forward coupling")
    if gen.drive is not None:
        raise GeneratorError("generator already carries a drive")
    return replace(gen, drive=h)


def dissipator_superop(V: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> V rho V^dag - {V^dag V, rho}/2``."""
    vv = lo.dag(V) @ V
    return lo.sandwich_op(V) - 0.5 * lo.anticommutator_op(vv)


def lindblad_superop(H: np.ndarray, couplings: Sequence[np.ndarray]) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    S = -1j * lo.commutator_op(H)
    for V in couplings:
        S = S + dissipator_superop(V)
    return S


def superop_from_generator(gen: GeneratorSpec, t: float = 0.0) -> np.ndarray:
    """Schrodinger-picture superoperator of the generator at time ``t``."""
    return lindblad_superop(gen.effective_hamiltonian(t), gen.effective_couplings(t))


def heisenberg_superop(gen: GeneratorSpec, t: float = 0.0) -> np.ndarray:
    """Dual generator acting on observables."""
    return lo.dual(superop_from_generator(gen, t))


def apply_generator(gen: GeneratorSpec, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (gen.dim, gen.dim):
        raise GeneratorError(f"state shape {rho.shape} does not match dimension {gen.dim}")
    H = gen.effective_hamiltonian(t)
    out = -1j * (H @ rho - rho @ H)
    for V in gen.effective_couplings(t):
        Vd = lo.dag(V)
        VV = Vd @ V
        out = out + V @ rho @ Vd - 0.5 * (VV @ rho + rho @ VV)
    return out


def apply_dual(gen: GeneratorSpec, X: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Heisenberg action ``i[H, X] + sum V^dag X V - {V^dag V, X}/2``."""
    X = np.asarray(X, dtype=complex)
    H = gen.effective_hamiltonian(t)
    out = 1j * (H @ X - X @ H)
    for V in gen.effective_couplings(t):
        Vd = lo.dag(V)
        VV = Vd @ V
        out = out + Vd @ X @ V - 0.5 * (VV @ X + X @ VV)
    return out


def unravel(gen: GeneratorSpec, channel: int | None = None, t: float = 0.0) -> UnraveledGenerator:
    """Split the generator into the jump part of ``channel`` and the remainder."""
    channel = gen.side if channel is None else channel
    cs = gen.effective_couplings(t)
    if channel is None or not 0 <= channel < len(cs):
        raise GeneratorError(f"invalid channel {channel!r}")
    jump = lo.sandwich_op(cs[channel])
    return UnraveledGenerator(smooth=superop_from_generator(gen, t) - jump, jump=jump)


def propagate_master(gen: GeneratorSpec, rho0: np.ndarray, t: float) -> np.ndarray:
    """``exp(t L) rho0`` for a time-independent generator."""
    if t < 0:
        raise GeneratorError("t must be nonnegative")
    if gen.time_dependent:
        raise GeneratorError("time-dependent drive: integrate stepwise instead")
    S = superop_from_generator(gen)
    return lo.hermitize(lo.apply(lo.mat_exp(t * S), rho0))


def semigroup(gen: GeneratorSpec, t: float) -> np.ndarray:
    if gen.time_dependent:
        raise GeneratorError("time-dependent drive: integrate stepwise instead")
    return lo.mat_exp(t * superop_from_generator(gen))


def steady_state(gen: GeneratorSpec) -> np.ndarray:
    """Null vector of the superoperator, normalized to a density matrix."""
    S = superop_from_generator(gen)
    _, _, vh = np.linalg.svd(S)
    rho = lo.unvec(vh[-1].conj())
    rho = lo.hermitize(rho / np.trace(rho))
    return rho


def dyson_sum(smooth: np.ndarray, jump: np.ndarray, t: float, order: int,
              n_grid: int = 256) -> np.ndarray:
    """Truncated Dyson expansion of ``exp(t (smooth + jump))`` in powers of ``jump``.

    Each term ``int exp((t-s_k) S) J ... J exp(s_1 S)`` over the ordered
    simplex is built recursively on a uniform grid with trapezoid weights.
    """
    h = t / n_grid
    grid_exp = np.empty((n_grid + 1,) + smooth.shape, dtype=complex)
    step = lo.mat_exp(h * smooth)
    grid_exp[0] = np.eye(smooth.shape[0])
    for i in range(1, n_grid + 1):
        grid_exp[i] = step @ grid_exp[i - 1]
    w = np.full(n_grid + 1, h)
    term = grid_exp.copy()  # term[i] = k-th order contribution over [0, t_i]
    total = grid_exp[-1].copy()
    for _ in range(order):
        jt = jump @ term  # J applied after each partial term
        nxt = np.empty_like(term)
        for i in range(n_grid + 1):
            if i == 0:
                nxt[0] = 0.0
                continue
            wi = w[: i + 1].copy()
            wi[0] *= 0.5
            wi[i] *= 0.5
            nxt[i] = np.einsum("j,jab,jbc->ac", wi, grid_exp[i::-1], jt[: i + 1])
        term = nxt
        total = total + term[-1]
    return total
