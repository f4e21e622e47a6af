"""
Measurement back-action of a coupled, then measured, ancilla.

The ancilla is always the first (high-order) subsystem of a 4x4 coupling.
For preparation ``|a>`` and measurement vectors ``|m+>, |m->`` the register
sees the Kraus pair ``K(+/-) = <m+/-| E |a>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .kak import canonical_d
from .linalg import (
    ATOL,
    I2,
    X,
    Y,
    Z,
    apply_to_qubits,
    dagger,
    is_unitary,
    proportional_to_unitary,
)


class NotUnitaryBranch(ValueError):
    """A Kraus operator is not proportional to a unitary."""


class ImpossibleOutcome(ValueError):
    """A measurement branch with (numerically) zero probability was requested."""


Outcome = Literal["+", "-"]


@dataclass(frozen=True)
class AncillaParams:
    """Ancilla preparation ``(gamma, delta)`` and measurement basis ``(theta, phi)``.

    The preparation is ``cos(gamma/2)|0> + exp(i delta) sin(gamma/2)|1>``; the
    measurement "+" vector has the same form in ``(theta, phi)`` and "-" is
    its orthogonal complement ``sin(theta/2)|0> - exp(i phi) cos(theta/2)|1>``.
    """

    gamma: float = np.pi / 2
    delta: float = 0.0
    theta: float = np.pi / 2
    phi: float = 0.0

    def preparation(self) -> np.ndarray:
        return np.array([np.cos(self.gamma / 2), np.exp(1j * self.delta) * np.sin(self.gamma / 2)])

    def measurement(self) -> tuple[np.ndarray, np.ndarray]:
        c, s, e = np.cos(self.theta / 2), np.sin(self.theta / 2), np.exp(1j * self.phi)
        return np.array([c, e * s]), np.array([s, -e * c])

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.gamma, self.delta, self.theta, self.phi)


Z_BASIS = AncillaParams(theta=0.0)
X_BASIS = AncillaParams()
Y_BASIS = AncillaParams(phi=np.pi / 2)


@dataclass(frozen=True)
class GeneralizedPauli:
    """Traceless Hermitian unitary ``a X + b Y + c Z`` with ``a^2 + b^2 + c^2 = 1``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if abs(self.a ** 2 + self.b ** 2 + self.c ** 2 - 1) > 1e-8:
            raise ValueError(f"coefficients ({self.a}, {self.b}, {self.c}) are not unit norm")

    @classmethod
    def from_matrix(cls, m: np.ndarray, tol: float = ATOL) -> Optional["GeneralizedPauli"]:
        """Read off the coefficients; None unless ``m`` is traceless Hermitian unitary."""
        m = np.asarray(m, dtype=complex)
        coeffs = np.array([np.trace(p @ m) / 2 for p in (X, Y, Z)])
        if abs(np.trace(m)) > tol or np.max(np.abs(coeffs.imag)) > tol:
            return None
        r = coeffs.real
        if abs(np.linalg.norm(r) - 1) > tol:
            return None
        r = r / np.linalg.norm(r)
        return cls(*map(float, r))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @property
    def matrix(self) -> np.ndarray:
        return self.a * X + self.b * Y + self.c * Z


@dataclass(frozen=True)
class KrausPair:
    k_plus: np.ndarray
    k_minus: np.ndarray
    p_plus: Optional[float] = None
    p_minus: Optional[float] = None

    def completeness_error(self) -> float:
        total = dagger(self.k_plus) @ self.k_plus + dagger(self.k_minus) @ self.k_minus
        return float(np.linalg.norm(total - I2))

    def with_state(self, psi: np.ndarray) -> "KrausPair":
        """Attach Born probabilities for a single-qubit pure state."""
        p = float(np.linalg.norm(self.k_plus @ psi) ** 2)
        m = float(np.linalg.norm(self.k_minus @ psi) ** 2)
        return KrausPair(self.k_plus, self.k_minus, p, m)

    def __getitem__(self, outcome: Outcome) -> np.ndarray:
        return self.k_plus if outcome == "+" else self.k_minus


def kraus_pair(e: np.ndarray, params: AncillaParams) -> KrausPair:
    """Register Kraus operators ``<m+/-| E |prep>`` for coupling ``e``."""
    e = np.asarray(e, dtype=complex)
    if e.shape != (4, 4) or not is_unitary(e, 1e-9):
        raise ValueError("coupling must be a 4x4 unitary")
    t = np.einsum("aibj,b->aij", e.reshape(2, 2, 2, 2), params.preparation())
    m_plus, m_minus = params.measurement()
    return KrausPair(
        np.einsum("a,aij->ij", m_plus.conj(), t),
        np.einsum("a,aij->ij", m_minus.conj(), t),
    )


def branching_relation(pair: KrausPair, tol: float = 1e-9) -> Optional[tuple[GeneralizedPauli, float]]:
    """Find ``(P, delta)`` with ``K-/s- = exp(i delta) P K+/s+``.

    The connector ``C = (K-/s-)(K+/s+)^dag`` is unitary; it is a phase times
    a generalized Pauli exactly when it is traceless. ``P`` is fixed by
    making its leading nonzero coefficient positive, which pins ``delta``
    to ``(-pi, pi]``.

    Raises
    ------
    NotUnitaryBranch
        If either Kraus operator is not proportional to a unitary.
    """
    plus = proportional_to_unitary(pair.k_plus, tol)
    minus = proportional_to_unitary(pair.k_minus, tol)
    if plus is None or minus is None:
        raise NotUnitaryBranch("Kraus operators are not both proportional to unitaries")
    conn = minus[1] @ dagger(plus[1])
    if abs(np.trace(conn)) > 2 * tol:
        return None
    e2 = -np.linalg.det(conn)
    delta = float(np.angle(e2) / 2)
    coeffs = np.array([np.trace(p @ conn) / 2 for p in (X, Y, Z)]) * np.exp(-1j * delta)
    if np.max(np.abs(coeffs.imag)) > tol:
        return None
    r = coeffs.real
    lead = r[np.argmax(np.abs(r) > 1e-9)]
    if lead < 0:
        r = -r
        delta = delta + np.pi
    delta = float(np.angle(np.exp(1j * delta)))
    if delta <= -np.pi:
        delta += 2 * np.pi
    return GeneralizedPauli(*map(float, r / np.linalg.norm(r))), delta


@dataclass(frozen=True)
class TensorCommutation:
    """``D (I (x) P) D^dag = sign * A (x) B``; ``None`` stands for the identity factor."""

    ancilla: Optional[GeneralizedPauli]
    register: Optional[GeneralizedPauli]
    sign: int

    def matrix(self) -> np.ndarray:
        a = I2 if self.ancilla is None else self.ancilla.matrix
        b = I2 if self.register is None else self.register.matrix
        return self.sign * np.kron(a, b)

    @property
    def register_identity(self) -> bool:
        return self.register is None


def _pauli_factor(v: np.ndarray, tol: float) -> tuple[Optional[GeneralizedPauli], int] | None:
    """Interpret real Pauli coordinates (I, X, Y, Z) as +/- identity or +/- P."""
    if abs(v[0]) > 1 - tol and np.linalg.norm(v[1:]) < tol:
        return None, int(np.sign(v[0]))
    if abs(v[0]) > tol:
        return None
    r = v[1:]
    sign = 1
    if r[np.argmax(np.abs(r) > 1e-9)] < 0:
        r, sign = -r, -1
    return GeneralizedPauli(*map(float, r / np.linalg.norm(r))), sign


def pauli_coefficients(m: np.ndarray) -> np.ndarray:
    """Coefficient matrix ``c[mu, nu] = tr(m (s_mu (x) s_nu)) / 4`` over I, X, Y, Z."""
    basis = (I2, X, Y, Z)
    return np.array([[np.trace(m @ np.kron(p, q)) / 4 for q in basis] for p in basis])


def tensor_commute(alphas, p: GeneralizedPauli, tol: float = 1e-9) -> Optional[TensorCommutation]:
    """Push a register correction ``P`` through ``D(alphas)``.

    Returns the local factors when ``D (I (x) P) D^dag`` is a tensor product
    of identities or generalized Paulis, else None.
    """
    d = canonical_d(*alphas)
    conj = d @ np.kron(I2, p.matrix) @ dagger(d)
    coeffs = pauli_coefficients(conj)
    if np.max(np.abs(coeffs.imag)) > tol:
        return None
    u, sv, vh = np.linalg.svd(coeffs.real)
    if np.any(sv[1:] > tol):
        return None
    left = _pauli_factor(u[:, 0] * np.sqrt(sv[0]), tol)
    right = _pauli_factor(vh[0] * np.sqrt(sv[0]), tol)
    if left is None or right is None:
        return None
    result = TensorCommutation(left[0], right[0], left[1] * right[1])
    if np.linalg.norm(result.matrix() - conj) > 10 * tol:
        return None
    return result


def back_action(
    state: np.ndarray,
    e: np.ndarray,
    register_qubit: int,
    params: AncillaParams,
    outcome: Outcome,
) -> tuple[np.ndarray, float]:
    """Post-measurement register state and the Born probability of ``outcome``."""
    k = kraus_pair(e, params)[outcome]
    out = apply_to_qubits(k, state, [register_qubit])
    prob = float(np.vdot(out, out).real)
    if prob < 1e-14:
        raise ImpossibleOutcome(f"outcome {outcome} has probability {prob:.3g}")
    return out / np.sqrt(prob), prob
