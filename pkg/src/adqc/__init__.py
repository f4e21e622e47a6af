"""Ancilla-driven quantum computation over a fixed two-qubit coupling."""

from .classifier import (
    ClassificationReport,
    InteractionClass,
    Witness,
    class_from_alphas,
    classify,
    classify_many,
    search_ancilla_params,
    unitary_kraus_mask,
    verify_witness,
)
from .compiler import (
    Circuit,
    CorrectionFrame,
    CZGate,
    EulerJAngles,
    Pattern,
    SingleQubit,
    UnflushedResidual,
    adapt_angle,
    compile_circuit,
    compile_cz,
    compile_single_qubit,
    euler_j,
    two_qubit_gates,
)
from .kak import CanonicalForm, canonical_d, kak_decompose, reconstruct
from .kernel import (
    AncillaParams,
    GeneralizedPauli,
    ImpossibleOutcome,
    KrausPair,
    NotUnitaryBranch,
    TensorCommutation,
    back_action,
    branching_relation,
    kraus_pair,
    tensor_commute,
)
from .simulator import (
    InvalidPovm,
    PovmSpec,
    RunResult,
    TooManyBranches,
    povm_neumark,
    remote_z_measure,
    run_pattern,
    verify_pattern,
)

__version__ = "0.1.0"

__all__ = [
    "AncillaParams",
    "CZGate",
    "Circuit",
    "ClassificationReport",
    "CorrectionFrame",
    "EulerJAngles",
    "GeneralizedPauli",
    "ImpossibleOutcome",
    "InteractionClass",
    "InvalidPovm",
    "KrausPair",
    "NotUnitaryBranch",
    "Pattern",
    "PovmSpec",
    "RunResult",
    "SingleQubit",
    "TensorCommutation",
    "TooManyBranches",
    "UnflushedResidual",
    "Witness",
    "adapt_angle",
    "back_action",
    "branching_relation",
    "class_from_alphas",
    "classify",
    "classify_many",
    "compile_circuit",
    "compile_cz",
    "compile_single_qubit",
    "euler_j",
    "kraus_pair",
    "povm_neumark",
    "remote_z_measure",
    "run_pattern",
    "search_ancilla_params",
    "tensor_commute",
    "two_qubit_gates",
    "unitary_kraus_mask",
    "verify_pattern",
    "verify_witness",
]
