import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adqc.compiler import (
    Circuit,
    Couple,
    CZGate,
    MeasureAncilla,
    Pattern,
    PrepareAncilla,
    SingleQubit,
    compile_circuit,
    compile_single_qubit,
)
from adqc.kernel import ImpossibleOutcome
from adqc.linalg import CZ, H, I2, X, equal_up_to_phase, random_state, random_unitary
from adqc.simulator import (
    ENUMERATE_LIMIT,
    InvalidPovm,
    PovmSpec,
    TooManyBranches,
    povm_neumark,
    remote_z_distribution,
    remote_z_measure,
    run_pattern,
    verify_pattern,
)

PLUS = np.array([1, 1]) / np.sqrt(2)
MINUS = np.array([1, -1]) / np.sqrt(2)
ZERO, ONE = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def h_pattern():
    return compile_circuit(Circuit(1, (SingleQubit(H, 0),)))


def z_readout_pattern():
    return Pattern(1, (PrepareAncilla(), Couple((0,)), MeasureAncilla(0.0, frozenset(), "z")))


def test_h_enumeration():
    results = run_pattern(h_pattern(), ZERO, "enumerate")
    assert len(results) == 16
    for r in results:
        assert r.branch_probability == pytest.approx(1 / 16)
        assert equal_up_to_phase(r.final_state, PLUS) is not None
    assert sorted(tuple(r.outcomes) for r in results) == sorted(
        tuple(int(b) for b in f"{k:04b}") for k in range(16))


def test_empty_pattern_is_identity():
    psi = random_state(2, np.random.default_rng(0))
    r = run_pattern(Pattern(2), psi, "sample", seed=1)
    assert np.allclose(r.final_state, psi) and r.branch_probability == 1 and r.outcomes == []


def test_flushed_cz_on_plus_plus():
    psi = np.kron(PLUS, PLUS)
    results = run_pattern(compile_circuit(Circuit(2, (CZGate(0, 1),))), psi, "enumerate")
    assert len(results) == 2 ** 9
    assert sum(r.branch_probability for r in results) == pytest.approx(1, abs=1e-9)
    for r in results:
        assert equal_up_to_phase(r.final_state, CZ @ psi, 1e-8) is not None


def test_branches_agree_for_random_circuit():
    rng = np.random.default_rng(1)
    c = Circuit(2, (SingleQubit(random_unitary(2, rng), 0), CZGate(0, 1)))
    psi = random_state(2, rng)
    finals = [r.final_state for r in run_pattern(compile_circuit(c), psi, "enumerate")]
    for f in finals:
        assert equal_up_to_phase(f, finals[0], 1e-8) is not None


def test_seeded_sampling_is_reproducible():
    p = compile_circuit(Circuit(2, (CZGate(0, 1), SingleQubit(H, 1))))
    psi = random_state(2, np.random.default_rng(2))
    a = run_pattern(p, psi, "sample", seed=42)
    b = run_pattern(p, psi, "sample", seed=42)
    c = run_pattern(p, psi, "sample", seed=43)
    assert a.outcomes == b.outcomes
    assert np.array_equal(a.final_state, b.final_state)
    assert a.outcomes != c.outcomes


def test_branch_mode_forces_outcomes():
    r = run_pattern(h_pattern(), ZERO, "branch", outcomes=[1, 0, 1, 1])
    assert r.outcomes == [1, 0, 1, 1]
    with pytest.raises(ValueError):
        run_pattern(h_pattern(), ZERO, "branch", outcomes=[1, 0])
    with pytest.raises(ValueError):
        run_pattern(h_pattern(), ZERO, "branch", outcomes=[2, 0, 0, 0])


def test_impossible_branch():
    with pytest.raises(ImpossibleOutcome):
        run_pattern(z_readout_pattern(), ZERO, "branch", outcomes=[1])
    # enumeration only lists branches that can happen
    results = run_pattern(z_readout_pattern(), ZERO, "enumerate")
    assert [r.outcomes for r in results] == [[0]]


def test_enumeration_limit():
    gates = tuple(SingleQubit(H, 0) for _ in range(ENUMERATE_LIMIT // 4 + 1))
    p = compile_circuit(Circuit(1, gates))
    assert p.measurement_count > ENUMERATE_LIMIT
    with pytest.raises(TooManyBranches):
        run_pattern(p, ZERO, "enumerate")


def test_input_checks():
    with pytest.raises(ValueError):
        run_pattern(h_pattern(), np.kron(ZERO, ZERO), "sample")
    with pytest.raises(ValueError):
        run_pattern(h_pattern(), np.array([1.0, 1.0]), "sample")
    with pytest.raises(ValueError):
        run_pattern(h_pattern(), ZERO, "nonsense")


def test_verify_pattern_examples():
    assert verify_pattern(compile_single_qubit(H, 0), H).max_infidelity < 1e-8
    cz = compile_circuit(Circuit(2, (CZGate(0, 1),)))
    assert verify_pattern(cz, CZ, inputs=1).max_infidelity < 1e-8
    wrong = verify_pattern(compile_single_qubit(H, 0), X, inputs=20)
    # XH rotates the Bloch sphere by pi/2, so the worst infidelity approaches 1/2
    assert 0.4 < wrong.max_infidelity <= 0.5 + 1e-12


def test_verify_samples_long_patterns():
    c = Circuit(2, (CZGate(0, 1), CZGate(0, 1)))
    report = verify_pattern(compile_circuit(c), np.eye(4), trials=25)
    assert report.branches_checked == 25 and report.max_distance < 1e-8


# remote readout


def test_remote_z_examples():
    j, post, p = remote_z_measure(ZERO, 0)
    assert (j, p) == (0, pytest.approx(1.0))
    assert equal_up_to_phase(post, PLUS) is not None
    j, post, p = remote_z_measure(ONE, 0)
    assert (j, p) == (1, pytest.approx(1.0))
    assert equal_up_to_phase(post, MINUS) is not None
    assert remote_z_distribution(PLUS, 0) == pytest.approx((0.5, 0.5))
    with pytest.raises(ImpossibleOutcome):
        remote_z_measure(ZERO, 0, outcome=1)


def test_remote_z_restore():
    j, post, _ = remote_z_measure(ONE, 0, restore=True, seed=3)
    assert j == 1 and equal_up_to_phase(post, ONE) is not None


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2))
def test_remote_matches_projective(seed, qubit):
    rng = np.random.default_rng(seed)
    psi = random_state(3, rng)
    probs = np.abs(psi.reshape(2, 2, 2)) ** 2
    direct = probs.sum(axis=tuple(a for a in range(3) if a != qubit))
    assert np.allclose(remote_z_distribution(psi, qubit), direct, atol=1e-12)
    _, post, _ = remote_z_measure(psi, qubit, seed=seed)
    assert abs(np.linalg.norm(post) - 1) < 1e-12


def test_remote_sampling_is_seeded():
    psi = random_state(2, np.random.default_rng(4))
    assert remote_z_measure(psi, 1, seed=9)[0] == remote_z_measure(psi, 1, seed=9)[0]


# POVMs


def projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def born(spec, psi):
    return [float(np.vdot(psi, e @ psi).real) for e in spec.elements]


def test_projective_povm():
    psi = random_state(1, np.random.default_rng(5))
    spec = PovmSpec((projector(ZERO), projector(ONE)))
    got = povm_neumark(spec, psi).probabilities
    assert np.allclose(got, np.abs(psi) ** 2, atol=1e-8)


def test_trine_on_zero():
    vecs = [np.array([np.cos(a / 2), np.sin(a / 2)]) for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    spec = PovmSpec(tuple(2 / 3 * projector(v) for v in vecs))
    r = povm_neumark(spec, ZERO)
    assert np.allclose(r.probabilities, [2 / 3, 1 / 6, 1 / 6], atol=1e-8)
    assert r.measurement_count > 0


def test_coin_povm():
    spec = PovmSpec((I2 / 2, I2 / 2))
    psi = random_state(1, np.random.default_rng(6))
    assert np.allclose(povm_neumark(spec, psi).probabilities, [0.5, 0.5], atol=1e-8)


def test_tetrahedral_povm_uses_all_slots():
    dirs = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    paulis = [X, np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    spec = PovmSpec(tuple((I2 + sum(n * p for n, p in zip(d, paulis))) / 4 for d in dirs))
    rng = np.random.default_rng(7)
    for _ in range(5):
        psi = random_state(1, rng)
        assert np.allclose(povm_neumark(spec, psi).probabilities, born(spec, psi), atol=1e-8)


def test_povm_on_entangled_register():
    rng = np.random.default_rng(8)
    psi = random_state(2, rng)
    spec = PovmSpec((projector(PLUS) * 0.7, projector(MINUS) * 0.7 + 0.3 * I2)[::-1])
    rho = np.einsum("ij,kj->ik", psi.reshape(2, 2), psi.reshape(2, 2).conj())  # reduced state of qubit 0
    want = [float(np.trace(rho @ e).real) for e in spec.elements]
    assert np.allclose(povm_neumark(spec, psi, qubit=0).probabilities, want, atol=1e-8)


def test_povm_validation():
    with pytest.raises(InvalidPovm):
        PovmSpec((projector(ZERO),))
    with pytest.raises(InvalidPovm):
        PovmSpec((np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))
    with pytest.raises(InvalidPovm):
        PovmSpec(tuple(I2 / 5 for _ in range(5)))
    with pytest.raises(InvalidPovm):
        PovmSpec((np.array([[0.5, 0.1], [0.2, 0.5]]), np.array([[0.5, -0.1], [-0.2, 0.5]])))
    # three full-rank elements need six dilation slots
    with pytest.raises(InvalidPovm):
        povm_neumark(PovmSpec((I2 / 3, I2 / 3, I2 / 3)), ZERO)


def test_povm_run_is_seeded():
    spec = PovmSpec((I2 / 2, I2 / 2))
    a = povm_neumark(spec, ZERO, seed=1)
    b = povm_neumark(spec, ZERO, seed=1)
    assert np.array_equal(a.probabilities, b.probabilities)
