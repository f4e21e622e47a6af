import numpy as np
import pytest

from adqc.classifier import (
    InteractionClass,
    class_from_alphas,
    classify,
    grid_axes,
    grid_merit,
    search_ancilla_params,
    unitary_kraus_mask,
    verify_witness,
)
from adqc.compiler import E_REFERENCE
from adqc.kak import canonical_d, kak_decompose
from adqc.kernel import AncillaParams, X_BASIS, branching_relation, kraus_pair
from adqc.linalg import CZ, CZ_SWAP, random_unitary

Q = np.pi / 4
C = InteractionClass


def dress(u, rng):
    return np.kron(random_unitary(2, rng), random_unitary(2, rng)) @ u @ np.kron(
        random_unitary(2, rng), random_unitary(2, rng))


@pytest.mark.parametrize(
    "alphas, cls",
    [
        ((Q, 0, 0), C.ISING_MAXIMAL),
        ((Q, Q, 0), C.HEISENBERG_XX_MAXIMAL),
        ((0.3, 0, 0), C.ISING_PARTIAL),
        ((Q, 0.3, 0), C.HEISENBERG_PARTIAL),
        ((Q, Q, Q), C.NOT_STEPWISE_DETERMINISTIC),
        ((0.3, 0.2, 0), C.NOT_STEPWISE_DETERMINISTIC),
        ((0, 0, 0), C.NOT_STEPWISE_DETERMINISTIC),
        ((Q - 5e-7, 0, 0), C.ISING_MAXIMAL),
        ((Q - 5e-6, 0, 0), C.ISING_PARTIAL),
    ],
)
def test_class_from_alphas(alphas, cls):
    assert class_from_alphas(alphas) is cls


def test_dressed_cz_is_ising_maximal_and_universal():
    rng = np.random.default_rng(0)
    r = classify(dress(CZ, rng))
    assert r.interaction_class is C.ISING_MAXIMAL
    assert r.universal and r.stepwise_deterministic and r.composable
    assert r.witness_params is not None and r.witness_branch is not None
    assert r.failure_reason is None


def test_cz_swap_is_heisenberg_maximal():
    r = classify(CZ_SWAP)
    assert r.interaction_class is C.HEISENBERG_XX_MAXIMAL and r.universal


def test_partial_ising_is_deterministic_but_not_universal():
    r = classify(canonical_d(np.pi / 8, 0, 0))
    assert r.interaction_class is C.ISING_PARTIAL
    assert r.stepwise_deterministic and not r.universal
    assert "plane" in r.failure_reasons["universal"]


def test_partial_heisenberg_is_not_composable():
    r = classify(canonical_d(np.pi / 8, Q, 0))
    assert r.interaction_class is C.HEISENBERG_PARTIAL
    assert not r.composable and not r.universal
    assert "composable" in r.failure_reasons


def test_alpha_z_breaks_determinism():
    r = classify(canonical_d(Q, np.pi / 8, np.pi / 8))
    assert r.interaction_class is C.NOT_STEPWISE_DETERMINISTIC
    assert not r.stepwise_deterministic and r.witness is None
    assert "alpha_z" in r.failure_reasons["stepwise_deterministic"]


def test_identity_has_no_witness():
    assert search_ancilla_params((0, 0, 0)) is None
    assert search_ancilla_params((Q, np.pi / 8, np.pi / 8)) is None


def test_report_invariants_hold():
    rng = np.random.default_rng(1)
    for u in (CZ, CZ_SWAP, canonical_d(0.2, 0, 0), canonical_d(Q, 0.4, 0), canonical_d(0.5, 0.3, 0.1)):
        r = classify(dress(u, rng))
        assert r.universal == (r.interaction_class in (C.ISING_MAXIMAL, C.HEISENBERG_XX_MAXIMAL))
        if r.universal:
            assert r.stepwise_deterministic and r.composable
        if r.stepwise_deterministic:
            assert r.witness_params is not None and r.witness_branch is not None
        for flag in ("universal", "stepwise_deterministic", "composable"):
            if not getattr(r, flag):
                assert r.failure_reasons.get(flag)


def test_class_is_local_invariant():
    rng = np.random.default_rng(2)
    for alphas in ((Q, 0, 0), (Q, Q, 0), (0.25, 0, 0), (Q, 0.25, 0), (0.5, 0.3, 0.1)):
        base = class_from_alphas(kak_decompose(canonical_d(*alphas)).alphas)
        for _ in range(20):
            assert class_from_alphas(kak_decompose(dress(canonical_d(*alphas), rng)).alphas) is base


def test_flags_are_local_invariant():
    rng = np.random.default_rng(3)
    u = canonical_d(0.35, 0, 0)
    ref = classify(u)
    for _ in range(3):
        r = classify(dress(u, rng))
        assert (r.interaction_class, r.universal, r.stepwise_deterministic, r.composable) == (
            ref.interaction_class, ref.universal, ref.stepwise_deterministic, ref.composable)


def test_ising_witness_in_d_frame():
    # |+> is an X eigenstate and cancels against XX, so the D-frame analogue of
    # the E-frame point (pi/2, 0, pi/2, 0) prepares |0> instead
    w = verify_witness((Q, 0, 0), AncillaParams(gamma=0.0, theta=np.pi / 2))
    assert w is not None and np.allclose(w.branch.vector, [1, 0, 0])
    assert verify_witness((Q, 0, 0), AncillaParams()) is None


def test_e_frame_point_is_a_valid_branch():
    p, delta = branching_relation(kraus_pair(E_REFERENCE, X_BASIS))
    assert np.allclose(p.vector, [1, 0, 0])


def test_found_witness_reverifies():
    for alphas in ((Q, 0, 0), (Q, Q, 0), (0.3, 0, 0), (Q, 0.3, 0)):
        w = search_ancilla_params(alphas)
        assert w is not None
        again = verify_witness(alphas, w.params, 1e-8)
        assert again is not None
        assert abs(np.linalg.norm(again.branch.vector) - 1) < 1e-8


def test_search_is_deterministic_and_serial_matches_parallel():
    a = search_ancilla_params((Q, 0.3, 0))
    b = search_ancilla_params((Q, 0.3, 0))
    c = search_ancilla_params((Q, 0.3, 0), jobs=2)
    assert a.params == b.params == c.params


def test_grid_merit_zero_at_witness():
    n = 8
    merit = grid_merit((Q, 0, 0), n)
    assert merit.shape == (n * n, n * n)
    assert merit.min() < 1e-12
    polar, azim = grid_axes(n)
    assert polar[n // 2] == pytest.approx(np.pi / 2)


def test_unitary_mask_is_not_vacuous():
    # with alpha_z = 0 the same scan does find unitary Kraus pairs
    assert unitary_kraus_mask((Q, 0.3, 0), 8, 1e-6).sum() > 0
    assert unitary_kraus_mask((Q, 0.3, 0.1), 8, 1e-6).sum() == 0


def test_classify_rejects_non_unitary():
    with pytest.raises(ValueError):
        classify(np.ones((4, 4)))
