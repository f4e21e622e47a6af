"""
State-vector execution of measurement patterns with an explicit ancilla.

The ancilla is appended as the last qubit of the simulated state, coupled
with the fixed ``E``, projected and discarded. The register only ever sees
``E``; logical results are recovered with the pattern's final frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Literal, Optional, Sequence

import numpy as np

from .compiler import (
    E_REFERENCE,
    Circuit,
    Couple,
    MeasureAncilla,
    Pattern,
    PatternBuilder,
    PrepareAncilla,
    compile_circuit,
    two_qubit_gates,
)
from .kernel import Z_BASIS, AncillaParams, ImpossibleOutcome, kraus_pair
from .linalg import H, apply_to_qubits, num_qubits, phase_distance, random_state, tensor

Mode = Literal["sample", "branch", "enumerate"]
ENUMERATE_LIMIT = 20
IMPOSSIBLE = 1e-14


class TooManyBranches(ValueError):
    """Enumeration was requested for more measurements than allowed."""


@dataclass
class RunResult:
    outcomes: list[int]
    final_state: np.ndarray
    branch_probability: float
    applied_final_frame: list[np.ndarray]
    step_probabilities: list[float] = field(default_factory=list)
    physical_state: Optional[np.ndarray] = None


def measurement_params(step: MeasureAncilla, outcomes: dict[int, int]) -> AncillaParams:
    if step.axis == "z":
        return Z_BASIS
    if step.axis == "y":
        return AncillaParams(phi=np.pi / 2)
    flip = sum(outcomes[i] for i in step.adapt_from) % 2
    return AncillaParams(phi=-step.base_angle if flip else step.base_angle)


def _prepare(step: PrepareAncilla) -> np.ndarray:
    return np.array([np.cos(step.gamma / 2), np.exp(1j * step.delta) * np.sin(step.gamma / 2)])


def _couple(state: np.ndarray, qubits: Sequence[int], ancilla: int) -> np.ndarray:
    state = apply_to_qubits(E_REFERENCE, state, [ancilla, qubits[0]])
    if len(qubits) == 2:
        state = apply_to_qubits(H, state, [ancilla])
        state = apply_to_qubits(E_REFERENCE, state, [ancilla, qubits[1]])
    return state


def _project(state: np.ndarray, params: AncillaParams) -> list[tuple[np.ndarray, float]]:
    """Unnormalized register states and probabilities for outcomes 0 and 1."""
    joint = state.reshape(-1, 2)
    out = []
    for m in params.measurement():
        v = joint @ m.conj()
        out.append((v, float(np.vdot(v, v).real)))
    return out


def _finish(pattern: Pattern, state: np.ndarray, outcomes: dict[int, int]):
    frames = [f.correction(outcomes) for f in pattern.final_frame_rule]
    logical = state
    for q, c in enumerate(frames):
        logical = apply_to_qubits(c, logical, [q])
    return logical, frames


def _walk(pattern: Pattern, state: np.ndarray, choose: Callable, skip_impossible: bool = False) -> Iterator[tuple]:
    """Depth-first over branches; ``choose(step_id, probs)`` lists outcomes to follow."""
    n = pattern.qubit_count
    steps = pattern.steps

    def rec(i, state, outcomes, order, prob, probs):
        while i < len(steps):
            step = steps[i]
            if isinstance(step, PrepareAncilla):
                state = np.kron(state, _prepare(step))
            elif isinstance(step, Couple):
                state = _couple(state, step.qubits, n)
            else:
                branches = _project(state, measurement_params(step, outcomes))
                for j in choose(i, [p for _, p in branches]):
                    v, p = branches[j]
                    if p < IMPOSSIBLE and skip_impossible:
                        continue
                    if p < IMPOSSIBLE:
                        raise ImpossibleOutcome(f"step {i}: outcome {j} has probability {p:.3g}")
                    yield from rec(i + 1, v / np.sqrt(p), {**outcomes, i: j}, order + [j], prob * p, probs + [p])
                return
            i += 1
        yield state, outcomes, order, prob, probs

    yield from rec(0, state, {}, [], 1.0, [])


def _check_input(pattern: Pattern, state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex).ravel()
    if num_qubits(state.size) != pattern.qubit_count:
        raise ValueError(f"input has {num_qubits(state.size)} qubits, pattern needs {pattern.qubit_count}")
    if abs(np.linalg.norm(state) - 1) > 1e-9:
        raise ValueError("input state is not normalized")
    return state


def run_pattern(
    pattern: Pattern,
    input_state: np.ndarray,
    mode: Mode = "sample",
    outcomes: Optional[Sequence[int]] = None,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
):
    """Execute ``pattern``.

    ``sample`` draws outcomes from the Born rule with a seeded generator,
    ``branch`` follows the given outcomes and ``enumerate`` returns a list
    with one result per branch (at most 2^20). Zero-probability branches
    raise ``ImpossibleOutcome`` when forced and are left out of enumerations.
    """
    pattern.validate()
    state = _check_input(pattern, input_state)
    m = pattern.measurement_count
    if mode == "sample":
        gen = rng if rng is not None else np.random.default_rng(seed)
        choose = lambda i, probs: [int(gen.random() * sum(probs) >= probs[0])]
    elif mode == "branch":
        if outcomes is None or len(outcomes) != m:
            raise ValueError(f"branch mode needs {m} outcomes")
        lookup = dict(zip(pattern.measurement_ids, (int(o) for o in outcomes)))
        if any(o not in (0, 1) for o in lookup.values()):
            raise ValueError("outcomes must be 0 or 1")
        choose = lambda i, probs: [lookup[i]]
    elif mode == "enumerate":
        if m > ENUMERATE_LIMIT:
            raise TooManyBranches(f"{m} measurements exceed the enumeration limit of {ENUMERATE_LIMIT}")
        choose = lambda i, probs: [0, 1]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    results = []
    for final, by_id, order, prob, probs in _walk(pattern, state, choose, mode == "enumerate"):
        logical, frames = _finish(pattern, final, by_id)
        results.append(RunResult(order, logical, prob, frames, probs, final))
    return results if mode == "enumerate" else results[0]


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    max_infidelity: float
    max_distance: float
    max_probability_deviation: float
    branches_checked: int

    def ok(self, tol: float = 1e-8) -> bool:
        return self.max_distance <= tol


def verify_pattern(
    pattern: Pattern,
    target: np.ndarray,
    trials: int = 200,
    seed: int = 0,
    inputs: int = 3,
) -> VerifyReport:
    """Compare every (or a sample of) branch outputs with ``target @ input``.

    Patterns with at most 14 measurements are enumerated for ``inputs``
    random inputs; longer ones are sampled ``trials`` times, each on a fresh
    random input. Distances are up to a global phase.
    """
    rng = np.random.default_rng(seed)
    n = pattern.qubit_count
    worst = dev = infid = 0.0
    count = 0

    def check(psi, result):
        nonlocal worst, dev, infid, count
        want = target @ psi
        worst = max(worst, phase_distance(result.final_state, want))
        infid = max(infid, 1 - abs(np.vdot(want, result.final_state)) ** 2)
        dev = max([dev] + [abs(p - 0.5) for p in result.step_probabilities])
        count += 1

    if pattern.measurement_count <= 14:
        for _ in range(inputs):
            psi = random_state(n, rng)
            for r in run_pattern(pattern, psi, "enumerate"):
                check(psi, r)
    else:
        for _ in range(trials):
            psi = random_state(n, rng)
            check(psi, run_pattern(pattern, psi, "sample", rng=rng))
    return VerifyReport(infid, worst, dev, count)


# ---------------------------------------------------------------------------
# remote readout


def remote_z_distribution(state: np.ndarray, qubit: int) -> tuple[float, float]:
    """Outcome probabilities of a z-basis ancilla readout of ``qubit``."""
    pair = kraus_pair(E_REFERENCE, Z_BASIS)
    probs = []
    for k in (pair.k_plus, pair.k_minus):
        v = apply_to_qubits(k, state, [qubit])
        probs.append(float(np.vdot(v, v).real))
    return probs[0], probs[1]


def remote_z_measure(
    state: np.ndarray,
    qubit: int,
    outcome: Optional[int] = None,
    seed: Optional[int] = None,
    restore: bool = False,
) -> tuple[int, np.ndarray, float]:
    """Read ``qubit`` in the z basis through one coupled ancilla.

    The register is left in ``H|j>`` on that qubit. With ``restore`` a
    compiled Hadamard brings it back to ``|j>``.
    """
    state = np.asarray(state, dtype=complex)
    pair = kraus_pair(E_REFERENCE, Z_BASIS)
    probs = remote_z_distribution(state, qubit)
    if outcome is None:
        outcome = int(np.random.default_rng(seed).random() >= probs[0])
    if probs[outcome] < IMPOSSIBLE:
        raise ImpossibleOutcome(f"z readout outcome {outcome} has probability {probs[outcome]:.3g}")
    k = pair.k_plus if outcome == 0 else pair.k_minus
    post = apply_to_qubits(k, state, [qubit]) / np.sqrt(probs[outcome])
    if restore:
        b = PatternBuilder(num_qubits(state.size))
        b.single_qubit(H, qubit)
        post = run_pattern(b.build(), post, "sample", seed=seed).final_state
    return outcome, post, probs[outcome]


# ---------------------------------------------------------------------------
# POVMs through a Neumark dilation


class InvalidPovm(ValueError):
    """The elements are not a valid, realizable single-qubit POVM."""


@dataclass(frozen=True)
class PovmSpec:
    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        object.__setattr__(self, "elements", els)
        if not 1 <= len(els) <= 4:
            raise InvalidPovm("between 1 and 4 elements are supported")
        for e in els:
            if e.shape != (2, 2) or np.linalg.norm(e - e.conj().T) > 1e-9:
                raise InvalidPovm("elements must be 2x2 Hermitian")
            if np.linalg.eigvalsh(e).min() < -1e-9:
                raise InvalidPovm("elements must be positive semidefinite")
        if np.linalg.norm(sum(els) - np.eye(2)) > 1e-9:
            raise InvalidPovm("elements do not sum to the identity")


@dataclass
class PovmResult:
    probabilities: np.ndarray
    measurement_count: int
    dilation: np.ndarray
    slots: list[int]


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def _isometry(spec: PovmSpec) -> tuple[np.ndarray, list[int]]:
    """4x2 isometry; row ``2 r + e`` is (register bit r, extension bit e).

    ``slots[k]`` names the outcome read from row k.
    """
    els = spec.elements
    v = np.zeros((4, 2), dtype=complex)
    if len(els) <= 2:
        for i, e in enumerate(els):
            root = _sqrt_psd(e)
            v[0 + i] = root[0]
            v[2 + i] = root[1]
        return v, [0, 1, 0, 1] if len(els) == 2 else [0, -1, 0, -1]
    rows, slots = [], []
    for i, e in enumerate(els):
        w, vec = np.linalg.eigh(e)
        for lam, col in zip(w, vec.T):
            if lam > 1e-12:
                rows.append(np.sqrt(lam) * col.conj())
                slots.append(i)
    if len(rows) > 4:
        raise InvalidPovm(f"total rank {len(rows)} exceeds the four dilation slots")
    for k, r in enumerate(rows):
        v[k] = r
    return v, slots + [-1] * (4 - len(rows))


def _unitary_completion(v: np.ndarray) -> np.ndarray:
    """4x4 unitary whose columns 0 and 2 (extension in ``|0>``) are ``v``."""
    cols = [v[:, 0], v[:, 1]]
    for e in np.eye(4):
        w = e - sum(np.vdot(c, e) * c for c in cols)
        if np.linalg.norm(w) > 1e-6:
            cols.append(w / np.linalg.norm(w))
        if len(cols) == 4:
            break
    u = np.zeros((4, 4), dtype=complex)
    u[:, 0], u[:, 2], u[:, 1], u[:, 3] = cols
    return u


def povm_neumark(
    spec: PovmSpec,
    state: np.ndarray,
    qubit: int = 0,
    seed: int = 0,
) -> PovmResult:
    """Realize ``spec`` on ``qubit`` with one extension qubit and remote readout.

    The dilation unitary is synthesized from CZs and single-qubit gates,
    compiled to a pattern and run on one sampled branch (all branches give the
    same logical state). Outcome probabilities are then exact sums over the
    z readout branches.
    """
    state = np.asarray(state, dtype=complex).ravel()
    n = num_qubits(state.size)
    v, slots = _isometry(spec)
    u = _unitary_completion(v)
    ext = n
    pattern = compile_circuit(Circuit(n + 1, tuple(two_qubit_gates(u, qubit, ext))))
    run = run_pattern(pattern, tensor(state, np.array([1, 0], dtype=complex)), "sample", seed=seed)
    probs = np.zeros(len(spec.elements))
    pair = kraus_pair(E_REFERENCE, Z_BASIS)
    kraus = (pair.k_plus, pair.k_minus)
    for e in (0, 1):
        after_e = apply_to_qubits(kraus[e], run.final_state, [ext])
        for r in (0, 1):
            k = slots[2 * r + e]
            if k < 0:
                continue
            after = apply_to_qubits(kraus[r], after_e, [qubit])
            probs[k] += float(np.vdot(after, after).real)
    return PovmResult(probs, pattern.measurement_count, u, slots)
