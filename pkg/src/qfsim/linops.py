"""Dense linear algebra on operators and superoperators.

Operators are complex ``(d, d)`` arrays, optionally with leading batch axes.
Superoperators act on column-stacked vectors, so ``vec(A @ X @ B)`` equals
``kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import numpy as np

TAYLOR_TOL = 1e-13

# two-level operators; index 0 is the excited level, index 1 the ground level
LOWERING = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
EXCITED = np.array([[1, 0], [0, 0]], dtype=complex)
GROUND = np.array([[0, 0], [0, 1]], dtype=complex)


class ShapeError(ValueError):
    """Raised when operands have incompatible or non-square shapes."""


def _square(a: np.ndarray, name: str = "operator") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stack the last two axes: ``x[..., i, j]`` lands at ``i + d*j``."""
    x = _square(x, "x")
    d = x.shape[-1]
    return np.swapaxes(x, -1, -2).reshape(x.shape[:-2] + (d * d,))


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=complex)
    d = int(round(np.sqrt(v.shape[-1])))
    if d * d != v.shape[-1]:
        raise ShapeError(f"length {v.shape[-1]} is not a perfect square")
    return np.swapaxes(v.reshape(v.shape[:-1] + (d, d)), -1, -2)


def left_op(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X``."""
    a = _square(a)
    return np.kron(np.eye(a.shape[0]), a)


def right_op(b: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> X B``."""
    b = _square(b)
    return np.kron(b.T, np.eye(b.shape[0]))


def sandwich_op(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Superoperator of ``X -> A X B``; ``B`` defaults to ``A^dagger``."""
    a = _square(a)
    b = dag(a) if b is None else _square(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return np.kron(b.T, a)


def commutator_op(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> [H, X]``."""
    return left_op(h) - right_op(h)


def anticommutator_op(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> {A, X}``."""
    return left_op(a) + right_op(a)


def trace_functional(d: int) -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(X) == trace(X)``."""
    return vec(np.eye(d, dtype=complex))


def dual(superop: np.ndarray) -> np.ndarray:
    """Hilbert-Schmidt adjoint: ``tr(Y^dag S(X)) == tr(S^dual(Y)^dag X)``."""
    return np.conj(np.asarray(superop)).T


def apply(superop: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a superoperator to a (possibly batched) operator."""
    return unvec(vec(x) @ np.asarray(superop).T)


def mat_exp(a: np.ndarray, tol: float = TAYLOR_TOL) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    The argument is scaled by ``2**-s`` until its 1-norm is at most 1/2, the
    series is summed until the next term falls below ``tol`` relative to the
    partial sum, and the result is squared ``s`` times. Leading axes are
    treated as a batch and share one scaling exponent.
    """
    a = _square(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix exponential of a non-finite matrix")
    d = a.shape[-1]
    norm = float(np.max(np.abs(a).sum(axis=-2))) if a.size else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    x = a / (2.0**s)
    eye = np.broadcast_to(np.eye(d, dtype=complex), a.shape)
    result = eye.copy()
    term = eye.copy()
    # squaring amplifies the truncation error roughly by 2**s
    cutoff = tol * 2.0**-s
    for k in range(1, 60):
        term = term @ x / k
        result = result + term
        if np.max(np.abs(term)) <= cutoff:
            break
    for _ in range(s):
        result = result @ result
    return result


def superop_exp(superop: np.ndarray, t: float) -> np.ndarray:
    """``exp(t L)`` for a superoperator ``L`` and ``t >= 0``."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    return mat_exp(t * np.asarray(superop))


def expm_series(a: np.ndarray, order: int = 40) -> np.ndarray:
    """Plain Taylor sum to a fixed order, without scaling; reference only."""
    a = _square(a)
    result = np.eye(a.shape[-1], dtype=complex)
    term = np.eye(a.shape[-1], dtype=complex)
    for k in range(1, order + 1):
        term = term @ a / k
        result = result + term
    return result


def hermitize(x: np.ndarray) -> np.ndarray:
    """Hermitian part ``(X + X^dag) / 2``."""
    return 0.5 * (x + dag(x))


def trace(x: np.ndarray) -> np.ndarray:
    """Trace over the last two axes."""
    return np.trace(x, axis1=-2, axis2=-1)


def normalize_state(rho: np.ndarray) -> np.ndarray:
    """Hermitize and rescale to unit trace."""
    rho = hermitize(rho)
    tr = trace(rho).real
    return rho / tr[..., None, None]


def trace_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Half the trace norm of ``a - b`` for Hermitian arguments."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape[-2:] != b.shape[-2:]:
        raise ShapeError(f"dimension mismatch {a.shape[-2:]} vs {b.shape[-2:]}")
    x = hermitize(a - b)
    if x.shape[-2:] == (2, 2):
        # eigenvalues m +- r of a Hermitian 2x2 matrix
        m = 0.5 * (x[..., 0, 0] + x[..., 1, 1]).real
        r = np.hypot(0.5 * (x[..., 0, 0] - x[..., 1, 1]).real, np.abs(x[..., 0, 1]))
        return np.maximum(np.abs(m), r)
    w = np.linalg.eigvalsh(x)
    return 0.5 * np.abs(w).sum(axis=-1)


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def is_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    if not np.allclose(rho, dag(rho), atol=atol):
        return False
    if abs(np.trace(rho) - 1) > atol:
        return False
    return bool(np.min(np.linalg.eigvalsh(hermitize(rho))) >= -atol)
