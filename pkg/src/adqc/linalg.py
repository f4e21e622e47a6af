"""
Dense complex linear algebra for few-qubit gates and state vectors.

Matrices and states are plain ``numpy`` arrays of dtype ``complex128``.
Qubit 0 is always the most significant bit of a basis index, so
``tensor(a, b)`` puts ``a`` on the lower-numbered qubits.
"""

from __future__ import annotations

from functools import reduce
from typing import Optional, Sequence

import numpy as np

ATOL = 1e-10
DECOMP_ATOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = (X + Z) / np.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
PAULIS = (I2, X, Y, Z)

# 1 - 2|11><11|
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
CZ_SWAP = CZ @ SWAP


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product, first argument on the high-order qubits."""
    return reduce(np.kron, ops)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def is_unitary(m: np.ndarray, tol: float = ATOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.linalg.norm(dagger(m) @ m - np.eye(m.shape[0])) <= tol)


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis state, e.g. ``basis_state("011")``."""
    bits = [int(b) for b in bits]
    psi = np.zeros(1 << len(bits), dtype=complex)
    psi[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return psi


def normalize(psi: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / norm


def apply_to_qubits(u: np.ndarray, state: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``u`` to the listed qubits of ``state``.

    ``targets[0]`` is the most significant qubit of ``u``. The input array is
    not modified.

    Raises
    ------
    ValueError
        On a dimension mismatch, a repeated target, or an out-of-range index.
    """
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state.shape[0])
    targets = [int(t) for t in targets]
    k = len(targets)
    if len(set(targets)) != k:
        raise ValueError(f"repeated target index in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise ValueError(f"target out of range for {n} qubits: {targets}")
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << k, 1 << k):
        raise ValueError(f"operator shape {u.shape} does not match {k} target qubits")
    psi = state.reshape((2,) * n)
    psi = np.moveaxis(psi, targets, range(k))
    psi = (u @ psi.reshape(1 << k, -1)).reshape((2,) * n)
    psi = np.moveaxis(psi, range(k), targets)
    return psi.reshape(-1)


def embed(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``u`` acting on ``targets``."""
    eye = np.eye(1 << n, dtype=complex)
    return np.stack([apply_to_qubits(u, col, targets) for col in eye.T], axis=1)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = DECOMP_ATOL) -> Optional[float]:
    """Return ``phi`` with ``a = exp(i phi) b`` within ``tol`` (Frobenius), else None.

    The phase is the least-squares optimum ``arg <b, a>``, so the test is
    the minimal distance over all global phases.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)
    phi = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    if np.linalg.norm(a - np.exp(1j * phi) * b) <= tol:
        return phi
    return None


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance between ``a`` and ``b`` minimized over global phase."""
    overlap = np.vdot(b, a)
    phi = np.angle(overlap) if abs(overlap) > 0 else 0.0
    return float(np.linalg.norm(np.asarray(a) - np.exp(1j * phi) * np.asarray(b)))


def proportional_to_unitary(m: np.ndarray, tol: float = ATOL) -> Optional[tuple[float, np.ndarray]]:
    """Split ``m = s U`` with ``s > 0`` and ``U`` unitary, if possible.

    All singular values must agree to ``tol`` relative to the largest one;
    the zero matrix is never accepted.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("proportional_to_unitary needs a square matrix")
    w, sv, vh = np.linalg.svd(m)
    top = sv[0]
    if top <= 1e-300 or (top - sv[-1]) > tol * top:
        return None
    return float(sv.mean()), w @ vh


def reshuffle(m: np.ndarray) -> np.ndarray:
    """Realignment of a 4x4 operator: ``R[(i j), (k l)] = m[(i k), (j l)]``.

    A product ``A (x) B`` maps to the rank-one matrix ``vec(A) vec(B)^T``.
    """
    return np.asarray(m).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)


def operator_schmidt_terms(m: np.ndarray) -> np.ndarray:
    """Operator Schmidt coefficients of a 4x4 matrix, descending.

    The number of coefficients above a tolerance is the operator Schmidt
    rank; rank one means ``m`` is a tensor product.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError("operator_schmidt_terms expects a 4x4 matrix")
    return np.linalg.svd(reshuffle(m), compute_uv=False)


def schmidt_rank(m: np.ndarray, tol: float = ATOL) -> int:
    return int(np.sum(operator_schmidt_terms(m) > tol))


def tensor_factors(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best product approximation ``m ~ A (x) B`` from the leading Schmidt term."""
    u, sv, vh = np.linalg.svd(reshuffle(m))
    scale = np.sqrt(sv[0])
    return (scale * u[:, 0]).reshape(2, 2), (scale * vh[0]).reshape(2, 2)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return psi / np.linalg.norm(psi)


def rx(angle: float) -> np.ndarray:
    """``exp(-i angle X / 2)``."""
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * X


def ry(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * Y


def rz(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * Z
