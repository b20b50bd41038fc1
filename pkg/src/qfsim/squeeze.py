"""Algebra of pure squeezed white noise.

A squeezed vacuum of the field is described by the mean quasiparticle number
``n`` and the pairing amplitude ``c``; purity requires ``n (n + 1) == |c|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linops as lo
from .lindblad import GeneratorError, GeneratorSpec

FOCK_TOL = 1e-10

J0 = np.array([[0.0, -1.0], [1.0, 0.0]])


class SqueezeError(ValueError):
    pass


@dataclass(frozen=True)
class SqueezeParams:
    n: float
    c: complex

    @property
    def a(self) -> float:
        return float(np.real(self.c))

    @property
    def b(self) -> float:
        return float(np.imag(self.c))

    @property
    def s(self) -> float:
        """Amplification factor ``2n + 1 + 2 Re c`` of the measured quadrature."""
        return 2 * self.n + 1 + 2 * self.a

    @property
    def real_c(self) -> bool:
        return self.b == 0


@dataclass(frozen=True)
class QuadCoeffs:
    """``A0 = mu * A_s^dagger + nu * A_s`` in terms of vacuum noises."""

    mu: complex
    nu: complex


def make_squeeze(n: float, c: complex = None) -> SqueezeParams:
    """Validated squeezing parameters; ``c`` defaults to the real root ``sqrt(n(n+1))``."""
    n = float(n)
    if n < 0:
        raise SqueezeError(f"n must be nonnegative, got {n}")
    if c is None:
        c = np.sqrt(n * (n + 1))
    c = complex(c)
    if abs(n * (n + 1) - abs(c) ** 2) > FOCK_TOL:
        raise SqueezeError(f"n(n+1) = {n * (n + 1)!r} differs from |c|^2 = {abs(c) ** 2!r}")
    return SqueezeParams(n=n, c=c)


def covariance_matrix(p: SqueezeParams) -> np.ndarray:
    n, a, b = p.n, p.a, p.b
    return np.array([[2 * n + 1 + 2 * a, 2 * b], [2 * b, 2 * n + 1 - 2 * a]])


def complex_structure(p: SqueezeParams) -> np.ndarray:
    """Real 2x2 matrix representing multiplication by ``i`` on the squeezed one-particle space."""
    return J0 @ covariance_matrix(p)


def quadrature_coeffs(p: SqueezeParams) -> QuadCoeffs:
    r = np.sqrt(p.s)
    return QuadCoeffs(mu=(p.n + p.c) / r, nu=(p.n + 1 + p.c) / r)


# A noise differential is stored as its coefficients on (dA^dagger, dA) of
# the vacuum field; the only nonzero vacuum product is dA dA^dagger = dt.
def _vacuum_product(x: tuple[complex, complex], y: tuple[complex, complex]) -> complex:
    return x[1] * y[0]


def squeezed_ito_coeffs(p: SqueezeParams) -> dict[str, complex]:
    """Products of squeezed noise differentials, in units of ``dt``.

    Keys: ``"AdAd"`` for dA0^dag dA0^dag, ``"AdA"`` for dA0^dag dA0,
    ``"AAd"`` for dA0 dA0^dag and ``"AA"`` for dA0 dA0.
    """
    return {"AdAd": np.conj(p.c), "AdA": complex(p.n), "AAd": complex(p.n + 1), "AA": p.c}


def ito_coeffs_from_quadratures(q: QuadCoeffs) -> dict[str, complex]:
    """The same table computed by expanding ``A0`` through the vacuum table."""
    a0 = (q.mu, q.nu)
    a0d = (np.conj(q.nu), np.conj(q.mu))
    return {
        "AdAd": _vacuum_product(a0d, a0d),
        "AdA": _vacuum_product(a0d, a0),
        "AAd": _vacuum_product(a0, a0d),
        "AA": _vacuum_product(a0, a0),
    }


def quadrature_parts(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Self-adjoint ``(V_R, V_I)`` with ``V = V_R + i V_I``."""
    V = np.asarray(V, dtype=complex)
    return 0.5 * (V + lo.dag(V)), -0.5j * (V - lo.dag(V))


@dataclass(frozen=True)
class EffectiveCoupling:
    V_nc: np.ndarray
    W_R: np.ndarray
    W_I: np.ndarray
    generator: GeneratorSpec


def effective_coupling(p: SqueezeParams, gen: GeneratorSpec) -> EffectiveCoupling:
    """Side coupling as seen through squeezed noise, and the resulting generator.

    The side coupling of ``gen`` is replaced by
    ``((n+1+conj c) V_s - (n+c) V_s^dag) / sqrt(s)``.
    """
    if gen.side is None:
        raise GeneratorError("generator has no side coupling")
    Vs = gen.couplings[gen.side]
    Vnc = ((p.n + 1 + np.conj(p.c)) * Vs - (p.n + p.c) * lo.dag(Vs)) / np.sqrt(p.s)
    WR, WI = quadrature_parts(Vnc)
    cs = list(gen.couplings)
    cs[gen.side] = Vnc
    Lnc = GeneratorSpec(H=gen.H, couplings=tuple(cs), forward=gen.forward, side=gen.side,
                        drive=gen.drive, meta=dict(gen.meta, squeeze=p))
    return EffectiveCoupling(V_nc=Vnc, W_R=WR, W_I=WI, generator=Lnc)
