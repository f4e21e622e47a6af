"""
Compile register circuits into ancilla-driven measurement patterns.

The fixed coupling is ``E = (H (x) H) CZ``. A fresh ``|+>`` ancilla coupled to
one register qubit and measured in the basis ``J(b)^dag |j>`` applies
``X^j J(b)`` to that qubit, where ``J(b) = H exp(i b Z / 2)``. Four such
steps give any single-qubit unitary; one ancilla coupled to two qubits and
measured in the y basis gives a CZ up to known local Cliffords.

Pauli by-products are never executed. They live in a per-qubit frame
``physical = residual . X^s Z^t . logical`` and are absorbed by flipping
the sign of later measurement angles. The frame powers are tracked
symbolically as sets of measurement step ids whose outcome parity gives
the actual power.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np

from .kak import kak_decompose
from .linalg import CZ, DECOMP_ATOL, H, I2, S, X, Z, dagger, embed, equal_up_to_phase, is_unitary

E_REFERENCE = np.kron(H, H) @ CZ
# static part of the CZ by-product H (I + iZ)/sqrt(2); the Z^j part joins the Pauli frame
CZ_RESIDUAL = H @ (I2 + 1j * Z) / np.sqrt(2)
PLUS = (np.pi / 2, 0.0)


class UnflushedResidual(ValueError):
    """An angle adaptation was requested while a non-Pauli correction is pending."""


def j_gate(beta: float) -> np.ndarray:
    """``H exp(i beta Z / 2)``."""
    return H @ np.diag([np.exp(0.5j * beta), np.exp(-0.5j * beta)])


# ---------------------------------------------------------------------------
# Euler decomposition into J factors


@dataclass(frozen=True)
class EulerJAngles:
    """``U = exp(i global_phase) J(0) J(beta) J(gamma_e) J(delta_e)``."""

    global_phase: float
    beta: float
    gamma_e: float
    delta_e: float

    def matrix(self) -> np.ndarray:
        return (np.exp(1j * self.global_phase) * j_gate(0.0) @ j_gate(self.beta)
                @ j_gate(self.gamma_e) @ j_gate(self.delta_e))

    def execution_angles(self) -> tuple[float, float, float, float]:
        """Base angles in the order the J steps are applied."""
        return (self.delta_e, self.gamma_e, self.beta, 0.0)


def _wrap(a: float) -> float:
    a = float(np.angle(np.exp(1j * a)))
    if abs(a) < 1e-13:
        return 0.0
    return np.pi if a <= -np.pi else a


def euler_j(u: np.ndarray) -> EulerJAngles:
    """Angles with ``U = e^{i a} e^{i b Z/2} e^{i g X/2} e^{i d Z/2}``.

    Among equivalent triples the one with the smallest ``|b| + |g| + |d|``
    is returned; when ``g`` is 0 or pi the free rotation goes into ``b``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("euler_j needs a 2x2 unitary")
    v = u / np.sqrt(np.linalg.det(u))
    gamma = 2 * np.arctan2(abs(v[0, 1]), abs(v[0, 0]))
    if abs(v[0, 1]) < 1e-12:
        beta, delta = 2 * np.angle(v[0, 0]), 0.0
    elif abs(v[0, 0]) < 1e-12:
        beta, delta = 2 * (np.angle(v[0, 1]) - np.pi / 2), 0.0
    else:
        plus, minus = np.angle(v[0, 0]), np.angle(v[0, 1]) - np.pi / 2
        beta, delta = plus + minus, plus - minus
    options = []
    for flip in (0, 1):
        b, g, d = (beta + np.pi, -gamma, delta + np.pi) if flip else (beta, gamma, delta)
        b, g, d = _wrap(b), _wrap(g), _wrap(d)
        if abs(g) < 1e-12 or abs(abs(g) - np.pi) < 1e-12:
            # b and d are interchangeable here; keep the rotation in b
            if abs(g) < 1e-12:
                b, d = _wrap(b + d), 0.0
            else:
                b, d = _wrap(b - d), 0.0
        options.append((abs(b) + abs(g) + abs(d), b, g, d))
    # ties keep the unflipped triple
    _, b, g, d = min(options, key=lambda o: round(o[0], 10))
    bare = EulerJAngles(0.0, b, g, d).matrix()
    phase = _wrap(np.angle(np.vdot(bare, u)))
    return EulerJAngles(phase, b, g, d)


# ---------------------------------------------------------------------------
# patterns


@dataclass(frozen=True)
class PrepareAncilla:
    gamma: float = PLUS[0]
    delta: float = PLUS[1]


@dataclass(frozen=True)
class Couple:
    """Couple the ancilla to one or two register qubits through ``E``.

    With two qubits the ancilla receives a Hadamard between the two
    couplings, which undoes the ancilla-side ``H`` of the first ``E``; the
    register is still only touched by ``E``.
    """

    qubits: tuple[int, ...]


Axis = Literal["xy", "y", "z"]


@dataclass(frozen=True)
class MeasureAncilla:
    """Measure the ancilla.

    ``xy``: basis ``(|0> +/- e^{i phi}|1>)/sqrt(2)`` with ``phi = base_angle``
    negated when the outcome parity over ``adapt_from`` is odd. ``y`` and
    ``z`` are the fixed Pauli bases. Outcome 0 is the "+" vector.
    """

    base_angle: float
    adapt_from: frozenset = frozenset()
    axis: Axis = "xy"


PatternStep = Union[PrepareAncilla, Couple, MeasureAncilla]


@dataclass(frozen=True)
class FinalFrame:
    """Per-qubit readout correction ``physical = residual X^s Z^t logical``."""

    x_from: frozenset = frozenset()
    z_from: frozenset = frozenset()
    residual: np.ndarray = field(default_factory=lambda: I2.copy())

    def correction(self, outcomes: dict[int, int]) -> np.ndarray:
        """Unitary mapping the physical qubit back to the logical one."""
        s = _parity(self.x_from, outcomes)
        t = _parity(self.z_from, outcomes)
        return np.linalg.matrix_power(Z, t) @ np.linalg.matrix_power(X, s) @ dagger(self.residual)


def _parity(ids, outcomes: dict[int, int]) -> int:
    return sum(outcomes[i] for i in ids) % 2


@dataclass(frozen=True)
class Pattern:
    qubit_count: int
    steps: tuple[PatternStep, ...] = ()
    final_frame_rule: tuple[FinalFrame, ...] = ()

    def __post_init__(self):
        if not self.final_frame_rule:
            object.__setattr__(self, "final_frame_rule", tuple(FinalFrame() for _ in range(self.qubit_count)))

    @property
    def measurement_ids(self) -> list[int]:
        return [i for i, s in enumerate(self.steps) if isinstance(s, MeasureAncilla)]

    @property
    def measurement_count(self) -> int:
        return len(self.measurement_ids)

    def validate(self) -> None:
        """Check step ordering and that adaptation only looks backwards."""
        prepared = coupled = False
        for i, step in enumerate(self.steps):
            if isinstance(step, PrepareAncilla):
                if prepared:
                    raise ValueError(f"step {i}: ancilla prepared twice")
                prepared, coupled = True, False
            elif isinstance(step, Couple):
                if not prepared:
                    raise ValueError(f"step {i}: coupling without a prepared ancilla")
                if not 1 <= len(step.qubits) <= 2 or len(set(step.qubits)) != len(step.qubits):
                    raise ValueError(f"step {i}: bad coupling targets {step.qubits}")
                if any(not 0 <= q < self.qubit_count for q in step.qubits):
                    raise ValueError(f"step {i}: qubit out of range")
                coupled = True
            else:
                if not coupled:
                    raise ValueError(f"step {i}: measurement without coupling")
                for j in step.adapt_from:
                    if j >= i or not isinstance(self.steps[j], MeasureAncilla):
                        raise ValueError(f"step {i}: adapts from non-preceding measurement {j}")
                prepared = coupled = False
        if prepared:
            raise ValueError("pattern ends with an unmeasured ancilla")


# ---------------------------------------------------------------------------
# correction frames


@dataclass(frozen=True)
class CorrectionFrame:
    """Concrete frame entry of one qubit: ``physical = residual X^s Z^t logical``."""

    pauli_x_power: int = 0
    pauli_z_power: int = 0
    residual: np.ndarray = field(default_factory=lambda: I2.copy())


def _is_identity(m: np.ndarray) -> bool:
    return equal_up_to_phase(m, I2, 1e-10) is not None


def adapt_angle(base: float, frame: CorrectionFrame) -> tuple[float, Callable[[int], CorrectionFrame]]:
    """Measurement angle realizing ``J(base)`` through a Pauli frame.

    ``J(b') X^s Z^t = Z^s X^t J((-1)^s b')``, so measuring at
    ``(-1)^s base`` yields ``X^j Z^s X^t J(base)`` on outcome ``j`` and the
    frame becomes ``X^(j xor t) Z^s``.
    """
    if not _is_identity(frame.residual):
        raise UnflushedResidual("flush the non-Pauli residual before adapting")
    s, t = frame.pauli_x_power, frame.pauli_z_power
    angle = -base if s else base

    def rule(j: int) -> CorrectionFrame:
        return CorrectionFrame(j ^ t, s)

    return angle, rule


_PAULI_BITS = {(0, 0): I2, (1, 0): X, (0, 1): Z, (1, 1): X @ Z}


def clifford_pauli_map(c: np.ndarray) -> tuple[tuple[int, int], tuple[int, int]]:
    """Bits ``(a, b), (c, d)`` with ``C X C^dag ~ X^a Z^b`` and ``C Z C^dag ~ X^c Z^d``."""
    out = []
    for p in (X, Z):
        image = c @ p @ dagger(c)
        for bits, q in _PAULI_BITS.items():
            if bits != (0, 0) and equal_up_to_phase(image, q, 1e-9) is not None:
                out.append(bits)
                break
        else:
            raise ValueError("residual is not a single-qubit Clifford")
    return out[0], out[1]


@dataclass
class _SymbolicFrame:
    s: frozenset = frozenset()
    t: frozenset = frozenset()
    residual: np.ndarray = field(default_factory=lambda: I2.copy())


# ---------------------------------------------------------------------------
# gates and circuits


@dataclass(frozen=True)
class SingleQubit:
    u: np.ndarray
    q: int


@dataclass(frozen=True)
class CZGate:
    q1: int
    q2: int


Gate = Union[SingleQubit, CZGate]


@dataclass(frozen=True)
class Circuit:
    qubits: int
    gates: tuple[Gate, ...] = ()

    def validate(self) -> None:
        for g in self.gates:
            if isinstance(g, SingleQubit):
                if not 0 <= g.q < self.qubits:
                    raise ValueError(f"qubit {g.q} out of range")
                if np.shape(g.u) != (2, 2) or not is_unitary(g.u, DECOMP_ATOL):
                    raise ValueError("single-qubit gate is not a 2x2 unitary")
            else:
                if g.q1 == g.q2 or not (0 <= g.q1 < self.qubits and 0 <= g.q2 < self.qubits):
                    raise ValueError(f"bad CZ qubits ({g.q1}, {g.q2})")

    def unitary(self) -> np.ndarray:
        u = np.eye(1 << self.qubits, dtype=complex)
        for g in self.gates:
            if isinstance(g, SingleQubit):
                u = embed(g.u, [g.q], self.qubits) @ u
            else:
                u = embed(CZ, [g.q1, g.q2], self.qubits) @ u
        return u


class PatternBuilder:
    """Accumulates steps while tracking the symbolic correction frame."""

    def __init__(self, qubit_count: int):
        self.qubit_count = qubit_count
        self.steps: list[PatternStep] = []
        self.frames = [_SymbolicFrame() for _ in range(qubit_count)]

    def _check(self, q: int) -> None:
        if not 0 <= q < self.qubit_count:
            raise ValueError(f"qubit {q} out of range for {self.qubit_count} qubits")

    def j_step(self, beta: float, q: int) -> None:
        self._check(q)
        f = self.frames[q]
        if not _is_identity(f.residual):
            raise UnflushedResidual(f"qubit {q} has a pending residual")
        mid = len(self.steps) + 2
        self.steps += [PrepareAncilla(), Couple((q,)), MeasureAncilla(float(beta), f.s, "xy")]
        self.frames[q] = _SymbolicFrame(frozenset({mid}) ^ f.t, f.s)

    def single_qubit(self, u: np.ndarray, q: int) -> None:
        for beta in euler_j(u).execution_angles():
            self.j_step(beta, q)

    def cz(self, q1: int, q2: int) -> None:
        self._check(q1)
        self._check(q2)
        if q1 == q2:
            raise ValueError("CZ needs two distinct qubits")
        f1, f2 = self.frames[q1], self.frames[q2]
        if not (_is_identity(f1.residual) and _is_identity(f2.residual)):
            raise UnflushedResidual("flush residuals before a CZ")
        mid = len(self.steps) + 2
        self.steps += [PrepareAncilla(), Couple((q1, q2)), MeasureAncilla(np.pi / 2, frozenset(), "y")]
        j = frozenset({mid})
        self.frames[q1] = _SymbolicFrame(f1.s, f1.t ^ f2.s ^ j, CZ_RESIDUAL.copy())
        self.frames[q2] = _SymbolicFrame(f2.s, f2.t ^ f1.s ^ j, CZ_RESIDUAL.copy())

    def flush(self, q: int) -> None:
        """Turn a Clifford residual into explicit J steps."""
        f = self.frames[q]
        if _is_identity(f.residual):
            return
        (a, b), (c, d) = clifford_pauli_map(f.residual)
        empty = frozenset()
        s = (f.s if a else empty) ^ (f.t if c else empty)
        t = (f.s if b else empty) ^ (f.t if d else empty)
        residual = f.residual
        self.frames[q] = _SymbolicFrame(s, t)
        self.single_qubit(dagger(residual), q)

    def build(self) -> Pattern:
        rule = tuple(FinalFrame(f.s, f.t, f.residual.copy()) for f in self.frames)
        return Pattern(self.qubit_count, tuple(self.steps), rule)


def compile_single_qubit(u: np.ndarray, qubit: int, qubit_count: Optional[int] = None) -> Pattern:
    """Four prepare/couple/measure triples applying ``J(d), J(g), J(b), J(0)``."""
    b = PatternBuilder(qubit + 1 if qubit_count is None else qubit_count)
    b.single_qubit(u, qubit)
    return b.build()


def compile_cz(q1: int, q2: int, qubit_count: Optional[int] = None) -> Pattern:
    """One y-measured ancilla; the by-products stay as frame residuals."""
    b = PatternBuilder(max(q1, q2) + 1 if qubit_count is None else qubit_count)
    b.cz(q1, q2)
    return b.build()


def compile_circuit(circuit: Circuit) -> Pattern:
    """Compile a circuit of single-qubit gates and CZs.

    The CZ by-products are flushed right after each CZ with compiled
    single-qubit fragments, so every later gate and the final readout see a
    Pauli-only frame.
    """
    circuit.validate()
    b = PatternBuilder(circuit.qubits)
    for g in circuit.gates:
        if isinstance(g, SingleQubit):
            b.single_qubit(g.u, g.q)
        else:
            b.cz(g.q1, g.q2)
            b.flush(g.q1)
            b.flush(g.q2)
    return b.build()


# ---------------------------------------------------------------------------
# two-qubit synthesis over {single-qubit, CZ}


def merge_single_qubit_runs(gates: Sequence[Gate]) -> list[Gate]:
    """Multiply consecutive single-qubit gates on the same qubit together."""
    out: list[Gate] = []
    pending: dict[int, np.ndarray] = {}

    def emit(q):
        if q in pending:
            u = pending.pop(q)
            if not _is_identity(u):
                out.append(SingleQubit(u, q))

    for g in gates:
        if isinstance(g, SingleQubit):
            pending[g.q] = g.u @ pending.get(g.q, I2)
        else:
            emit(g.q1)
            emit(g.q2)
            out.append(g)
    for q in sorted(pending):
        emit(q)
    return out


def _zz_gates(theta: float, q1: int, q2: int, frame: np.ndarray) -> list[Gate]:
    """``exp(-i theta P P)`` with ``P = frame Z frame^dag`` on both qubits."""
    rx = np.cos(theta) * I2 - 1j * np.sin(theta) * X
    gates: list[Gate] = [SingleQubit(dagger(frame), q1), SingleQubit(dagger(frame), q2)]
    gates += [SingleQubit(H, q2), CZGate(q1, q2), SingleQubit(rx, q2), CZGate(q1, q2), SingleQubit(H, q2)]
    gates += [SingleQubit(frame, q1), SingleQubit(frame, q2)]
    return gates


def two_qubit_gates(u: np.ndarray, q1: int, q2: int) -> list[Gate]:
    """Gate list realizing the 4x4 unitary ``u`` on ``(q1, q2)`` up to phase."""
    form = kak_decompose(u)
    gates: list[Gate] = [SingleQubit(form.v_ancilla, q1), SingleQubit(form.v_register, q2)]
    # D = exp(-i az ZZ) exp(-i ay YY) exp(-i ax XX); the three commute
    for theta, frame in ((form.alpha_x, H), (form.alpha_y, S @ H), (form.alpha_z, I2)):
        if abs(theta) > 1e-14:
            gates += _zz_gates(theta, q1, q2, frame)
    gates += [SingleQubit(form.w_ancilla, q1), SingleQubit(form.w_register, q2)]
    return merge_single_qubit_runs(gates)
