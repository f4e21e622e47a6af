"""
JSON documents for matrices, circuits, patterns, run results and reports.

Complex numbers are ``[re, im]`` pairs. Floats are written with 17
significant digits so a document reproduces its values exactly and two runs
with the same inputs give byte-identical text.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .classifier import ClassificationReport
from .compiler import (
    Circuit,
    Couple,
    CZGate,
    FinalFrame,
    MeasureAncilla,
    Pattern,
    PrepareAncilla,
    SingleQubit,
)
from .simulator import PovmSpec, RunResult


class DocumentError(ValueError):
    """A document is malformed."""


def _fmt(x: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise DocumentError("non-finite float")
        if x == 0:
            return "0.0"
        s = format(x, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + _fmt(v, indent, level + 1) for k, v in x.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        # keep short numeric rows on one line
        if all(not isinstance(v, (dict, list, tuple)) for v in x) or indent == 0:
            return "[" + ", ".join(_fmt(v, 0, 0) for v in x) + "]"
        return "[" + sep.join(pad + _fmt(v, indent, level + 1) for v in x) + end + "]"
    raise DocumentError(f"cannot serialize {type(x).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _fmt(obj, indent, 0)


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc


# matrices and states


def matrix_to_doc(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in m.ravel()]}


def matrix_from_doc(doc: Any) -> np.ndarray:
    try:
        dim = doc["dim"]
        entries = doc["entries"]
        if not isinstance(dim, int) or dim < 1 or len(entries) != dim * dim:
            raise DocumentError("entry count must be dim^2")
        vals = [complex(float(re), float(im)) for re, im in entries]
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"bad matrix document: {exc}") from exc
    return np.array(vals, dtype=complex).reshape(dim, dim)


def state_to_doc(psi: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(psi, dtype=complex).ravel()]


def state_from_doc(doc: Any) -> np.ndarray:
    try:
        return np.array([complex(float(re), float(im)) for re, im in doc], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"bad state document: {exc}") from exc


_NAMED = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
}


def named_state(label: str) -> np.ndarray:
    """Product state from a label such as ``"0"``, ``"++"`` or ``"+0-"``."""
    if not label or any(c not in _NAMED for c in label):
        raise DocumentError(f"unknown basis label {label!r}; use characters from 0 1 + -")
    out = np.array([1], dtype=complex)
    for c in label:
        out = np.kron(out, _NAMED[c])
    return out


# circuits


def circuit_to_doc(c: Circuit) -> dict:
    gates = []
    for g in c.gates:
        if isinstance(g, SingleQubit):
            gates.append({"type": "u", "q": g.q, "matrix": matrix_to_doc(g.u)})
        else:
            gates.append({"type": "cz", "q1": g.q1, "q2": g.q2})
    return {"qubits": c.qubits, "gates": gates}


def circuit_from_doc(doc: Any) -> Circuit:
    try:
        gates = []
        for g in doc["gates"]:
            if g["type"] == "u":
                gates.append(SingleQubit(matrix_from_doc(g["matrix"]), int(g["q"])))
            elif g["type"] == "cz":
                gates.append(CZGate(int(g["q1"]), int(g["q2"])))
            else:
                raise DocumentError(f"unknown gate type {g['type']!r}")
        return Circuit(int(doc["qubits"]), tuple(gates))
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"bad circuit document: {exc}") from exc


# patterns


def pattern_to_doc(p: Pattern) -> dict:
    steps = []
    for s in p.steps:
        if isinstance(s, PrepareAncilla):
            steps.append({"kind": "prepare", "gamma": s.gamma, "delta": s.delta})
        elif isinstance(s, Couple):
            steps.append({"kind": "couple", "qubits": list(s.qubits)})
        else:
            steps.append({"kind": "measure", "axis": s.axis, "base_angle": s.base_angle,
                          "adapt_from": sorted(s.adapt_from)})
    frames = [{"x_from": sorted(f.x_from), "z_from": sorted(f.z_from), "residual": matrix_to_doc(f.residual)}
              for f in p.final_frame_rule]
    return {"qubit_count": p.qubit_count, "measurements": p.measurement_count,
            "steps": steps, "final_frame_rule": frames}


def pattern_from_doc(doc: Any) -> Pattern:
    try:
        steps = []
        for s in doc["steps"]:
            kind = s["kind"]
            if kind == "prepare":
                steps.append(PrepareAncilla(float(s["gamma"]), float(s["delta"])))
            elif kind == "couple":
                steps.append(Couple(tuple(int(q) for q in s["qubits"])))
            elif kind == "measure":
                if s["axis"] not in ("xy", "y", "z"):
                    raise DocumentError(f"unknown axis {s['axis']!r}")
                steps.append(MeasureAncilla(float(s["base_angle"]), frozenset(int(i) for i in s["adapt_from"]),
                                            s["axis"]))
            else:
                raise DocumentError(f"unknown step kind {kind!r}")
        frames = tuple(
            FinalFrame(frozenset(f["x_from"]), frozenset(f["z_from"]), matrix_from_doc(f["residual"]))
            for f in doc["final_frame_rule"]
        )
        pattern = Pattern(int(doc["qubit_count"]), tuple(steps), frames)
        if len(pattern.final_frame_rule) != pattern.qubit_count:
            raise DocumentError("final_frame_rule needs one entry per qubit")
        pattern.validate()
        return pattern
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"bad pattern document: {exc}") from exc


# results and reports


def run_result_to_doc(r: RunResult) -> dict:
    return {
        "outcomes": list(r.outcomes),
        "branch_probability": r.branch_probability,
        "final_state": state_to_doc(r.final_state),
        "applied_final_frame": [matrix_to_doc(m) for m in r.applied_final_frame],
    }


def run_result_from_doc(doc: Any) -> RunResult:
    try:
        return RunResult(
            [int(o) for o in doc["outcomes"]],
            state_from_doc(doc["final_state"]),
            float(doc["branch_probability"]),
            [matrix_from_doc(m) for m in doc["applied_final_frame"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"bad run result document: {exc}") from exc


def report_to_doc(r: ClassificationReport) -> dict:
    f = r.canonical
    doc = {
        "class": r.interaction_class.value,
        "universal": r.universal,
        "stepwise_deterministic": r.stepwise_deterministic,
        "composable": r.composable,
        "alphas": list(f.alphas),
        "global_phase": f.global_phase,
        "locals": {
            "v_ancilla": matrix_to_doc(f.v_ancilla), "v_register": matrix_to_doc(f.v_register),
            "w_ancilla": matrix_to_doc(f.w_ancilla), "w_register": matrix_to_doc(f.w_register),
        },
        "witness": None,
        "failure_reasons": dict(r.failure_reasons),
    }
    if r.witness is not None:
        w = r.witness
        tc = w.commutation
        doc["witness"] = {
            "params": dict(zip(("gamma", "delta", "theta", "phi"), w.params.as_tuple())),
            "branch_pauli": list(w.branch.vector),
            "branch_phase": w.delta,
            "commutation": {
                "ancilla": None if tc.ancilla is None else list(tc.ancilla.vector),
                "register": None if tc.register is None else list(tc.register.vector),
                "sign": tc.sign,
            },
        }
    return doc


def povm_from_doc(doc: Any) -> PovmSpec:
    """``{"elements": [MatrixDocument, ...]}``; validation errors pass through."""
    try:
        elements = tuple(matrix_from_doc(m) for m in doc["elements"])
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"bad POVM document: {exc}") from exc
    return PovmSpec(elements)


def povm_to_doc(spec: PovmSpec) -> dict:
    return {"elements": [matrix_to_doc(e) for e in spec.elements]}
