import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adqc.compiler import (
    CZ_RESIDUAL,
    Circuit,
    CorrectionFrame,
    Couple,
    CZGate,
    MeasureAncilla,
    Pattern,
    PatternBuilder,
    PrepareAncilla,
    SingleQubit,
    UnflushedResidual,
    adapt_angle,
    clifford_pauli_map,
    compile_circuit,
    compile_cz,
    compile_single_qubit,
    euler_j,
    j_gate,
    merge_single_qubit_runs,
    two_qubit_gates,
)
from adqc.linalg import (
    CZ, H, I2, X, Z, embed, equal_up_to_phase, phase_distance, random_state, random_unitary, schmidt_rank,
)
from adqc.simulator import run_pattern, verify_pattern

PLUS = np.array([1, 1]) / np.sqrt(2)


def zrot(a):
    return np.diag([np.exp(0.5j * a), np.exp(-0.5j * a)])


def xrot(a):
    return np.cos(a / 2) * I2 + 1j * np.sin(a / 2) * X


# euler_j


def test_euler_identity():
    e = euler_j(I2)
    assert (e.global_phase, e.beta, e.gamma_e, e.delta_e) == (0, 0, 0, 0)


def test_euler_single_rotations_land_in_one_slot():
    e = euler_j(zrot(0.7))
    assert np.allclose([e.beta, e.gamma_e, e.delta_e], [0.7, 0, 0])
    e = euler_j(xrot(0.7))
    assert np.allclose([e.beta, e.gamma_e, e.delta_e], [0, 0.7, 0])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_euler_reconstructs(seed):
    u = random_unitary(2, np.random.default_rng(seed))
    e = euler_j(u)
    assert np.linalg.norm(e.matrix() - u) < 1e-9
    for a in (e.global_phase, e.beta, e.gamma_e, e.delta_e):
        assert -np.pi < a <= np.pi


@pytest.mark.parametrize("u", [X, Z, H, X @ Z, zrot(np.pi), xrot(np.pi), xrot(-np.pi + 1e-9)])
def test_euler_branch_cut_cases(u):
    assert np.linalg.norm(euler_j(u).matrix() - u) < 1e-9


def test_euler_picks_smallest_representative():
    # (b, g, d) and (b + pi, -g, d + pi) describe the same gate
    u = zrot(3.0) @ xrot(0.4) @ zrot(2.9)
    e = euler_j(u)
    assert abs(e.beta) + abs(e.gamma_e) + abs(e.delta_e) < 3.0 + 0.4 + 2.9


def test_euler_rejects_non_unitary():
    with pytest.raises(ValueError):
        euler_j(np.ones((2, 2)))


# J identities and angle adaptation


def test_j_commutation_identities():
    rng = np.random.default_rng(0)
    for b in rng.uniform(-np.pi, np.pi, 100):
        assert np.linalg.norm(j_gate(b) @ X - Z @ j_gate(-b)) < 1e-12
        assert np.linalg.norm(j_gate(b) @ Z - X @ j_gate(b)) < 1e-12


@pytest.mark.parametrize("s, t", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_adapt_angle_absorbs_frame(s, t):
    beta = 0.83
    angle, rule = adapt_angle(beta, CorrectionFrame(s, t))
    assert angle == (-beta if s else beta)
    frame = np.linalg.matrix_power(X, s) @ np.linalg.matrix_power(Z, t)
    for j in (0, 1):
        new = rule(j)
        assert (new.pauli_x_power, new.pauli_z_power) == (j ^ t, s)
        got = np.linalg.matrix_power(X, j) @ j_gate(angle) @ frame
        want = np.linalg.matrix_power(X, new.pauli_x_power) @ np.linalg.matrix_power(Z, new.pauli_z_power) @ j_gate(beta)
        assert equal_up_to_phase(got, want, 1e-12) is not None


def test_adapt_angle_refuses_pending_residual():
    with pytest.raises(UnflushedResidual):
        adapt_angle(0.1, CorrectionFrame(0, 0, CZ_RESIDUAL))


def test_cz_residual_is_clifford():
    (a, b), (c, d) = clifford_pauli_map(CZ_RESIDUAL)
    assert (a, b, c, d) == (1, 1, 1, 0)
    with pytest.raises(ValueError):
        clifford_pauli_map(zrot(0.3))


# single-qubit fragments


def test_single_qubit_fragment_shape():
    p = compile_single_qubit(H, 0)
    assert p.measurement_count == 4
    kinds = [type(s) for s in p.steps]
    assert kinds == [PrepareAncilla, Couple, MeasureAncilla] * 4
    assert all(s.axis == "xy" for s in p.steps if isinstance(s, MeasureAncilla))


def test_identity_fragment_has_zero_angles():
    angles = [s.base_angle for s in compile_single_qubit(I2, 0).steps if isinstance(s, MeasureAncilla)]
    assert angles == [0, 0, 0, 0]


def test_z_rotation_fragment_angles():
    angles = [s.base_angle for s in compile_single_qubit(zrot(np.pi / 3), 0).steps if isinstance(s, MeasureAncilla)]
    assert np.allclose(angles, [0, 0, np.pi / 3, 0])


def test_h_fragment_zero_branch():
    r = run_pattern(compile_single_qubit(H, 0), np.array([1, 0]), "branch", outcomes=[0, 0, 0, 0])
    assert equal_up_to_phase(r.final_state, PLUS) is not None


def test_later_angles_adapt_on_earlier_outcomes():
    p = compile_single_qubit(random_unitary(2, np.random.default_rng(1)), 0)
    ids = p.measurement_ids
    assert p.steps[ids[0]].adapt_from == frozenset()
    for k in range(1, 4):
        assert p.steps[ids[k]].adapt_from <= frozenset(ids[:k])
    assert p.steps[ids[1]].adapt_from == frozenset({ids[0]})


# CZ fragments


def test_cz_fragment_shape():
    p = compile_cz(0, 1)
    assert p.steps == (PrepareAncilla(), Couple((0, 1)), MeasureAncilla(np.pi / 2, frozenset(), "y"))
    assert all(np.allclose(f.residual, CZ_RESIDUAL) for f in p.final_frame_rule)


def test_cz_fragment_on_plus_plus():
    psi = np.kron(PLUS, PLUS)
    results = run_pattern(compile_cz(0, 1), psi, "enumerate")
    assert len(results) == 2
    for r in results:
        assert equal_up_to_phase(r.final_state, CZ @ psi) is not None
        assert r.branch_probability == pytest.approx(0.5)


def test_cz_corrections_are_local():
    for j in (0, 1):
        u = CZ_RESIDUAL @ np.linalg.matrix_power(Z, j)
        assert np.allclose(u.conj().T @ u, I2)
        assert schmidt_rank(np.kron(u, u)) == 1


def test_cz_twice_is_identity():
    c = Circuit(2, (CZGate(0, 1), CZGate(0, 1)))
    report = verify_pattern(compile_circuit(c), np.eye(4), trials=50)
    assert report.max_distance < 1e-8


def test_cz_rejects_same_qubit():
    with pytest.raises(ValueError):
        compile_cz(1, 1)


def test_builder_refuses_adaptation_through_residual():
    b = PatternBuilder(2)
    b.cz(0, 1)
    with pytest.raises(UnflushedResidual):
        b.single_qubit(H, 0)
    with pytest.raises(UnflushedResidual):
        b.cz(0, 1)


def test_frame_invariant_at_fragment_boundary():
    # physical = (residual X^s Z^t per qubit) logical, with the residuals still pending
    rng = np.random.default_rng(2)
    psi = random_state(2, rng)
    p = compile_cz(0, 1)
    for r in run_pattern(p, psi, "enumerate"):
        outcomes = dict(zip(p.measurement_ids, r.outcomes))
        frame = np.eye(1)
        for f in p.final_frame_rule:
            s = sum(outcomes[i] for i in f.x_from) % 2
            t = sum(outcomes[i] for i in f.z_from) % 2
            frame = np.kron(frame, f.residual @ np.linalg.matrix_power(X, s) @ np.linalg.matrix_power(Z, t))
        assert equal_up_to_phase(r.physical_state, frame @ CZ @ psi) is not None


# circuits


def test_singleton_circuit_matches_fragment():
    a = compile_circuit(Circuit(1, (SingleQubit(H, 0),)))
    b = compile_single_qubit(H, 0)
    assert a.steps == b.steps
    for fa, fb in zip(a.final_frame_rule, b.final_frame_rule):
        assert (fa.x_from, fa.z_from) == (fb.x_from, fb.z_from)
        assert np.allclose(fa.residual, fb.residual)


def test_cz_then_x_structure():
    p = compile_circuit(Circuit(2, (CZGate(0, 1), SingleQubit(X, 0))))
    meas = [p.steps[i] for i in p.measurement_ids]
    assert meas[0].axis == "y"
    assert len(meas) == 1 + 8 + 4
    # two flush fragments, then the X fragment on qubit 0
    couples = [s.qubits for s in p.steps if isinstance(s, Couple)]
    assert couples == [(0, 1)] + [(0,)] * 4 + [(1,)] * 4 + [(0,)] * 4
    report = verify_pattern(p, np.kron(X, I2) @ CZ, trials=50)
    assert report.max_distance < 1e-8


def test_final_frames_are_pauli_only_after_flush():
    p = compile_circuit(Circuit(2, (CZGate(0, 1),)))
    assert all(np.allclose(f.residual, I2) for f in p.final_frame_rule)


def test_pattern_length_bound():
    rng = np.random.default_rng(3)
    gates = [SingleQubit(random_unitary(2, rng), 0), CZGate(0, 1), CZGate(1, 2), SingleQubit(H, 2)]
    p = compile_circuit(Circuit(3, tuple(gates)))
    assert p.measurement_count <= 4 * 2 + 2 * 9


def test_random_three_qubit_circuit_every_branch():
    rng = np.random.default_rng(4)
    gates = []
    for k in range(8):
        if k % 3 == 1:
            q1, q2 = rng.choice(3, 2, replace=False)
            gates.append(CZGate(int(q1), int(q2)))
        else:
            gates.append(SingleQubit(random_unitary(2, rng), int(rng.integers(3))))
    c = Circuit(3, tuple(gates))
    report = verify_pattern(compile_circuit(c), c.unitary(), trials=100, seed=1)
    assert report.max_distance < 1e-8
    assert report.max_probability_deviation < 1e-10


def test_circuit_rejects_bad_indices():
    with pytest.raises(ValueError):
        compile_circuit(Circuit(2, (SingleQubit(H, 2),)))
    with pytest.raises(ValueError):
        compile_circuit(Circuit(2, (CZGate(0, 0),)))
    with pytest.raises(ValueError):
        compile_circuit(Circuit(1, (SingleQubit(np.ones((2, 2)), 0),)))


def test_pattern_validation():
    bad = Pattern(1, (PrepareAncilla(), MeasureAncilla(0.0)))
    with pytest.raises(ValueError):
        bad.validate()
    bad = Pattern(1, (PrepareAncilla(), Couple((0,)), MeasureAncilla(0.0, frozenset({5}))))
    with pytest.raises(ValueError):
        bad.validate()
    with pytest.raises(ValueError):
        Pattern(1, (PrepareAncilla(), Couple((0,)))).validate()


# two-qubit synthesis


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_two_qubit_gates_reproduce_unitary(seed):
    u = random_unitary(4, np.random.default_rng(seed))
    gates = two_qubit_gates(u, 0, 1)
    assert sum(isinstance(g, CZGate) for g in gates) <= 6
    assert phase_distance(Circuit(2, tuple(gates)).unitary(), u) < 1e-9


def test_two_qubit_gates_on_other_qubits():
    u = random_unitary(4, np.random.default_rng(5))
    c = Circuit(3, tuple(two_qubit_gates(u, 2, 0)))
    # qubit 2 carries the first tensor factor of u
    assert phase_distance(c.unitary(), embed(u, [2, 0], 3)) < 1e-9


def test_merge_keeps_unitary():
    rng = np.random.default_rng(6)
    gates = [SingleQubit(random_unitary(2, rng), 0), SingleQubit(random_unitary(2, rng), 0), CZGate(0, 1),
             SingleQubit(random_unitary(2, rng), 1), SingleQubit(random_unitary(2, rng), 0)]
    merged = merge_single_qubit_runs(gates)
    assert len(merged) == 4
    assert phase_distance(Circuit(2, tuple(merged)).unitary(), Circuit(2, tuple(gates)).unitary()) < 1e-12
