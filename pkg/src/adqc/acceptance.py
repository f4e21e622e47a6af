"""
Acceptance checks shared by the test suite and ``adqc selftest``.

Each check returns a :class:`Check` with a pass flag and a one-line summary
of the worst observed deviation. Checks use fixed seeds.
"""

from __future__ import annotations

import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .classifier import InteractionClass, classify, unitary_kraus_mask, verify_witness
from .compiler import CZ_RESIDUAL, E_REFERENCE, Circuit, CZGate, SingleQubit, compile_circuit, j_gate
from .kak import canonical_d, kak_decompose, reconstruct
from .kernel import AncillaParams
from .linalg import CZ, CZ_SWAP, H, I2, Z, equal_up_to_phase, phase_distance, random_state, random_unitary
from .simulator import InvalidPovm, PovmSpec, povm_neumark, remote_z_distribution, verify_pattern

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = float("inf")

    def line(self, timing: bool = True) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] criterion {self.number}: {self.name} | {self.detail}"
        return text + f" | {self.seconds:.2f}s (budget {self.budget:g}s)" if timing else text


def _timed(number: int, name: str, budget: float, fn: Callable[[], tuple[bool, str]]) -> Check:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure with a reason, not a traceback
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    secs = time.perf_counter() - start
    if ok and secs > budget:
        ok, detail = False, detail + "; over time budget"
    return Check(number, name, ok, detail, secs, budget)


def _register_kraus(coupling_chain: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """``<bra|_A chain |+>_A`` for a chain whose first subsystem is the ancilla."""
    d = coupling_chain.shape[0] // 2
    t = coupling_chain.reshape(2, d, 2, d)
    return np.einsum("a,aibj,b->ij", bra.conj(), t, PLUS)


# ---------------------------------------------------------------------------


def check_single_qubit_identity(samples: int = 100, seed: int = 1) -> tuple[bool, str]:
    """``<j| J_A(b) E |+>_A = X^j J(b) / sqrt(2)`` up to phase."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for beta in rng.uniform(-np.pi, np.pi, samples):
        chain = np.kron(j_gate(beta), I2) @ E_REFERENCE
        for j in (0, 1):
            k = _register_kraus(chain, np.eye(2)[j])
            want = np.linalg.matrix_power(np.array([[0, 1], [1, 0]]), j) @ j_gate(beta) / np.sqrt(2)
            worst = max(worst, phase_distance(k, want))
    return worst <= 1e-10, f"{samples} betas x 2 outcomes, worst distance {worst:.2e} (tol 1e-10)"


def cz_mediation_chain() -> np.ndarray:
    """Ancilla (0), R (1), R' (2): ``E_AR' H_A E_AR`` applied in that order."""
    from .linalg import embed

    e1 = embed(E_REFERENCE, [0, 1], 3)
    e2 = embed(E_REFERENCE, [0, 2], 3)
    return e2 @ embed(H, [0], 3) @ e1


def literal_cz_chain() -> np.ndarray:
    """``E_AR' E_AR`` with nothing between the couplings."""
    from .linalg import embed

    return embed(E_REFERENCE, [0, 2], 3) @ embed(E_REFERENCE, [0, 1], 3)


def check_cz_identity() -> tuple[bool, str]:
    """``<y_j| E_AR' H_A E_AR |+>_A = U(j) (x) U(j) CZ / sqrt(2)``."""
    chain = cz_mediation_chain()
    worst = 0.0
    for j in (0, 1):
        bra = AncillaParams(phi=np.pi / 2).measurement()[j]
        k = _register_kraus(chain, bra)
        u = CZ_RESIDUAL @ np.linalg.matrix_power(Z, j)
        worst = max(worst, phase_distance(k, np.kron(u, u) @ CZ / np.sqrt(2)))
    return worst <= 1e-10, f"2 y outcomes, worst distance {worst:.2e} (tol 1e-10)"


def check_kak(samples: int = 1000, seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u = random_unitary(4, rng)
        worst = max(worst, phase_distance(reconstruct(kak_decompose(u)), u))
    cz = np.abs(np.array(kak_decompose(CZ).alphas) - [np.pi / 4, 0, 0]).max()
    cs = np.abs(np.array(kak_decompose(CZ_SWAP).alphas) - [np.pi / 4, np.pi / 4, 0]).max()
    ok = worst <= 1e-9 and cz <= 1e-9 and cs <= 1e-9
    return ok, (f"{samples} Haar samples worst {worst:.2e}; CZ alpha error {cz:.1e}; "
                f"CZ+SWAP alpha error {cs:.1e} (tol 1e-9)")


def dressed_instances(per_class: int = 20, seed: int = 4) -> list[tuple[np.ndarray, InteractionClass]]:
    """Locally dressed couplings, ``per_class`` for each of the five classes."""
    rng = np.random.default_rng(seed)
    q = np.pi / 4
    makers = {
        InteractionClass.ISING_MAXIMAL: lambda: (q, 0.0, 0.0),
        InteractionClass.HEISENBERG_XX_MAXIMAL: lambda: (q, q, 0.0),
        InteractionClass.ISING_PARTIAL: lambda: (rng.uniform(0.05, q - 0.05), 0.0, 0.0),
        InteractionClass.HEISENBERG_PARTIAL: lambda: (q, rng.uniform(0.05, q - 0.05), 0.0),
    }
    out = []
    for cls, make in makers.items():
        for _ in range(per_class):
            out.append((make(), cls))
    for i in range(per_class):
        ax = rng.uniform(0.15, q - 0.02)
        ay = rng.uniform(0.08, ax - 0.04)
        az = rng.uniform(0.05, ay) if i % 2 == 0 else 0.0
        out.append(((ax, ay, az), InteractionClass.NOT_STEPWISE_DETERMINISTIC))
    dressed = []
    for alphas, cls in out:
        a, b, c, d = (random_unitary(2, rng) for _ in range(4))
        e = np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.kron(a, b) @ canonical_d(*alphas) @ np.kron(c, d)
        dressed.append((e, cls))
    return dressed


def check_classifier(per_class: int = 20, jobs: int = 1) -> tuple[bool, str]:
    wrong, unverified = 0, 0
    instances = dressed_instances(per_class)
    for e, expected in instances:
        report = classify(e, jobs=jobs)
        if report.interaction_class is not expected:
            wrong += 1
        expected_stepwise = expected is not InteractionClass.NOT_STEPWISE_DETERMINISTIC
        if report.stepwise_deterministic != expected_stepwise:
            wrong += 1
        if report.stepwise_deterministic:
            if verify_witness(report.canonical.alphas, report.witness.params, 1e-8) is None:
                unverified += 1
    n = len(instances)
    return wrong == 0 and unverified == 0, f"{n} instances, {n - wrong} correct, {unverified} unverifiable witnesses"


def check_alpha_z(samples: int = 10, grid: int = 64, seed: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(samples):
        ax = rng.uniform(0.1, np.pi / 4)
        ay = rng.uniform(0.05, ax)
        az = rng.uniform(0.05, ay) if ay > 0.05 else 0.05
        hits += int(unitary_kraus_mask((ax, ay, az), grid, 1e-6).sum())
    return hits == 0, f"{samples} alphas on a {grid}^4 grid, {hits} unitary Kraus pairs (expected 0)"


def random_circuit(rng: np.random.Generator, qubits: int = 3, gates: int = 8) -> Circuit:
    out = []
    kinds = rng.permutation([0, 1] + list(rng.integers(0, 2, gates - 2)))
    for kind in kinds:
        if kind:
            q1, q2 = rng.choice(qubits, 2, replace=False)
            out.append(CZGate(int(q1), int(q2)))
        else:
            out.append(SingleQubit(random_unitary(2, rng), int(rng.integers(qubits))))
    return Circuit(qubits, tuple(out))


def check_compiler(circuits: int = 50, seed: int = 6) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = dev = 0.0
    branches = 0
    for i in range(circuits):
        c = random_circuit(rng)
        r = verify_pattern(compile_circuit(c), c.unitary(), trials=200, seed=seed + i, inputs=1)
        worst, dev = max(worst, r.max_distance), max(dev, r.max_probability_deviation)
        branches += r.branches_checked
    ok = worst <= 1e-8 and dev <= 1e-10
    return ok, (f"{circuits} circuits, {branches} branches, worst state distance {worst:.2e} (tol 1e-8), "
                f"worst |p - 1/2| {dev:.2e} (tol 1e-10)")


def check_remote(samples: int = 100, seed: int = 7) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        target = int(rng.integers(3))
        psi = random_state(1, rng)
        parts = [random_state(1, rng) for _ in range(3)]
        parts[target] = psi
        state = np.kron(np.kron(parts[0], parts[1]), parts[2])
        p = remote_z_distribution(state, target)
        worst = max(worst, abs(p[0] - abs(psi[0]) ** 2), abs(p[1] - abs(psi[1]) ** 2))
    return worst <= 1e-12, f"{samples} states, worst deviation {worst:.2e} (tol 1e-12)"


def trine() -> PovmSpec:
    vecs = [np.array([np.cos(a / 2), np.sin(a / 2)]) for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    return PovmSpec(tuple(2 / 3 * np.outer(v, v) for v in vecs))


def check_povm(samples: int = 100, seed: int = 8) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    spec = trine()
    worst = 0.0
    for i in range(samples):
        psi = random_state(1, rng)
        got = povm_neumark(spec, psi, 0, seed=i).probabilities
        want = [float(np.vdot(psi, e @ psi).real) for e in spec.elements]
        worst = max(worst, float(np.abs(got - want).max()))
    try:
        PovmSpec(tuple(spec.elements[:2]))
        rejected = False
    except InvalidPovm:
        rejected = True
    ok = worst <= 1e-8 and rejected
    return ok, f"{samples} states, worst deviation {worst:.2e} (tol 1e-8); broken spec rejected: {rejected}"


# ---------------------------------------------------------------------------
# command line end to end


def _cli(args: list[str], env: dict) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "adqc", *args], capture_output=True, text=True, env=env)


def check_cli() -> tuple[bool, str]:
    from . import documents as docs

    env = {**os.environ, "ADQC_SEED": "11"}
    problems = []
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)

        def write(name, obj):
            path = d / name
            path.write_text(docs.dumps(obj))
            return str(path)

        files = {
            "czswap": write("czswap.json", docs.matrix_to_doc(CZ_SWAP)),
            "ident": write("ident.json", docs.matrix_to_doc(np.eye(4))),
            "ising": write("ising.json", docs.matrix_to_doc(canonical_d(np.pi / 8, 0, 0))),
            "nonunitary": write("bad.json", docs.matrix_to_doc(np.ones((4, 4)))),
            "garbage": write("garbage.json", {"dim": 4}),
            "h": write("h.json", docs.circuit_to_doc(Circuit(1, (SingleQubit(H, 0),)))),
            "cz": write("cz.json", docs.circuit_to_doc(Circuit(2, (CZGate(0, 1),)))),
            "empty": write("empty.json", docs.circuit_to_doc(Circuit(1, ()))),
            "badcirc": write("badcirc.json", {"qubits": 1, "gates": [{"type": "cz", "q1": 0, "q2": 3}]}),
            "trine": write("trine.json", docs.povm_to_doc(trine())),
            # sums to I/3, not I
            "broken": write("broken.json", {"elements": [docs.matrix_to_doc(np.eye(2) / 3)]}),
        }
        hpat, czpat = str(d / "h.pattern.json"), str(d / "cz.pattern.json")
        expect = [
            (["classify", files["czswap"]], 0, "HeisenbergXXMaximal"),
            (["classify", files["ident"]], 4, "NotStepwiseDeterministic"),
            (["classify", files["ising"]], 3, "IsingPartial"),
            (["classify", files["nonunitary"]], 2, None),
            (["classify", files["garbage"]], 1, None),
            (["compile", files["h"], "--out", hpat], 0, "4"),
            (["compile", files["cz"], "--out", czpat], 0, "9"),
            (["compile", files["empty"], "--out", str(d / "e.json")], 0, "0"),
            (["compile", files["badcirc"], "--out", str(d / "x.json")], 2, None),
            (["simulate", hpat, "--input", "0", "--mode", "enumerate"], 0, None),
            (["simulate", czpat, "--input", "++", "--mode", "sample", "--trials", "3"], 0, None),
            (["simulate", czpat, "--input", "++", "--mode", "branch", "--outcomes", "0" * 9], 0, None),
            (["povm", files["trine"], "--state", "0"], 0, None),
            (["povm", files["broken"], "--state", "0"], 2, None),
            (["selftest", "--level", "bogus"], 1, None),
        ]
        outputs = {}
        for args, code, needle in expect:
            r = _cli(args, env)
            outputs[tuple(args)] = r.stdout
            if r.returncode != code:
                problems.append(f"{args[0]} {Path(args[1]).name}: exit {r.returncode}, wanted {code}")
            elif args[0] == "compile" and r.returncode == 0 and r.stdout.strip() != needle:
                problems.append(f"compile {Path(args[1]).name}: printed {r.stdout.strip()!r}, wanted {needle}")
            elif args[0] != "compile" and needle is not None and needle not in r.stdout:
                problems.append(f"{args[0]} {Path(args[1]).name}: output lacks {needle!r}")

        # semantic spot checks on the JSON outputs
        for args, out in outputs.items():
            if args[0] == "simulate" and args[2] == "0":
                for res in docs.loads(out)["results"]:
                    psi = docs.state_from_doc(res["final_state"])
                    if equal_up_to_phase(psi, PLUS, 1e-8) is None:
                        problems.append("H pattern on |0> did not give |+>")
            if args[0] == "simulate" and args[2] == "++":
                want = CZ @ np.kron(PLUS, PLUS)
                for res in docs.loads(out)["results"]:
                    if equal_up_to_phase(docs.state_from_doc(res["final_state"]), want, 1e-8) is None:
                        problems.append("CZ pattern on |++> did not give CZ|++>")
            if args[0] == "povm" and "trine" in args[1]:
                p = docs.loads(out)["probabilities"]
                if np.abs(np.array(p) - [2 / 3, 1 / 6, 1 / 6]).max() > 1e-8:
                    problems.append(f"trine distribution {p}")

        # same-seed reruns must be byte identical
        for args in (["selftest", "--level", "quick"],
                     ["simulate", czpat, "--input", "++", "--mode", "sample", "--seed", "5", "--trials", "4"],
                     ["classify", files["czswap"]]):
            a, b = _cli(args, env), _cli(args, env)
            if a.returncode != 0 or a.stdout != b.stdout:
                problems.append(f"{args[0]} not reproducible (exit {a.returncode})")
        c = _cli(["simulate", czpat, "--input", "++", "--mode", "sample", "--trials", "4"], env)
        s = _cli(["simulate", czpat, "--input", "++", "--mode", "sample", "--seed", "11", "--trials", "4"], env)
        if c.stdout != s.stdout:
            problems.append("ADQC_SEED default differs from the same --seed")
    detail = f"{len(expect)} exit-code cases, 4 reproducibility checks"
    return not problems, detail if not problems else detail + "; " + "; ".join(problems)


# ---------------------------------------------------------------------------

CRITERIA = {
    1: ("single-qubit ancilla identity, J(b) = H exp(i b Z/2)", 1.0, check_single_qubit_identity),
    2: ("two-qubit CZ mediation identity, ancilla H between couplings", 1.0, check_cz_identity),
    3: ("KAK round trip", 10.0, check_kak),
    4: ("classifier confusion matrix", 300.0, check_classifier),
    5: ("alpha_z must vanish", 600.0, check_alpha_z),
    6: ("compiler determinism", 120.0, check_compiler),
    7: ("remote z measurement", 1.0, check_remote),
    8: ("Neumark POVM", 10.0, check_povm),
    9: ("CLI end to end", 30.0, check_cli),
}


def run_criterion(number: int) -> Check:
    name, budget, fn = CRITERIA[number]
    return _timed(number, name, budget, fn)


def quick_suite() -> list[Check]:
    return [
        _timed(3, "KAK round trip (100 samples)", 10.0, lambda: check_kak(samples=100)),
        run_criterion(1),
        run_criterion(2),
    ]


def full_suite(jobs: int = 1) -> list[Check]:
    checks = []
    for n in sorted(CRITERIA):
        if n == 4:
            name, budget, _ = CRITERIA[4]
            checks.append(_timed(4, name, budget, lambda: check_classifier(jobs=jobs)))
        else:
            checks.append(run_criterion(n))
    return checks
