"""
Command line: ``adqc classify | compile | simulate | povm | selftest``.

Exit codes
----------
0  success (classify: universal coupling)
1  parse or usage error, unknown selftest level
2  invalid input (non-unitary matrix, invalid circuit, incomplete POVM)
3  classify: step-wise deterministic but not universal
4  classify: not step-wise deterministic
5  simulate: enumeration refused (more than 20 measurements)
6  simulate: a forced branch has zero probability
7  selftest: a suite failed

Results go to stdout as JSON, diagnostics to stderr. The default seed comes
from the ``ADQC_SEED`` environment variable (0 if unset); ``--seed`` wins.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import documents as docs
from .classifier import BOUNDARY_TOL, InteractionClass, classify
from .compiler import compile_circuit
from .kernel import ImpossibleOutcome
from .linalg import DECOMP_ATOL, is_unitary
from .simulator import InvalidPovm, TooManyBranches, povm_neumark, run_pattern

SEED_ENV = "ADQC_SEED"

EXIT_OK, EXIT_PARSE, EXIT_INVALID = 0, 1, 2
EXIT_NOT_UNIVERSAL, EXIT_NOT_STEPWISE = 3, 4
EXIT_TOO_MANY, EXIT_IMPOSSIBLE, EXIT_SELFTEST = 5, 6, 7


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"{SEED_ENV}={raw!r} is not an integer")


def _read(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise docs.DocumentError(f"cannot read {path}: {exc}") from exc
    return docs.loads(text)


def _state(arg: str) -> np.ndarray:
    """A basis label like ``0+`` or a path to a JSON ``[[re, im], ...]`` list."""
    if Path(arg).is_file():
        psi = docs.state_from_doc(_read(arg))
    else:
        psi = docs.named_state(arg)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise docs.DocumentError("state is not normalized")
    return psi


def _emit(obj) -> None:
    sys.stdout.write(docs.dumps(obj) + "\n")


def _err(msg: str) -> None:
    print(f"adqc: {msg}", file=sys.stderr)


def cmd_classify(args) -> int:
    m = docs.matrix_from_doc(_read(args.path))
    if m.shape != (4, 4):
        raise docs.DocumentError("classify needs a 4x4 matrix")
    if not is_unitary(m, DECOMP_ATOL):
        _err("matrix is not unitary")
        return EXIT_INVALID
    report = classify(m, grid=args.grid, jobs=args.jobs, tol=args.tol)
    _emit(docs.report_to_doc(report))
    if report.universal:
        return EXIT_OK
    if report.interaction_class is InteractionClass.NOT_STEPWISE_DETERMINISTIC or not report.stepwise_deterministic:
        return EXIT_NOT_STEPWISE
    return EXIT_NOT_UNIVERSAL


def cmd_compile(args) -> int:
    circuit = docs.circuit_from_doc(_read(args.circuit))
    try:
        pattern = compile_circuit(circuit)
    except ValueError as exc:
        _err(f"invalid circuit: {exc}")
        return EXIT_INVALID
    text = docs.dumps(docs.pattern_to_doc(pattern)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(pattern.measurement_count)
    else:
        sys.stdout.write(text)
        print(f"measurements: {pattern.measurement_count}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    pattern = docs.pattern_from_doc(_read(args.pattern))
    psi = _state(args.input)
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        if args.mode == "enumerate":
            results = run_pattern(pattern, psi, "enumerate")
        elif args.mode == "branch":
            if args.outcomes is None:
                raise _UsageError("branch mode needs --outcomes, e.g. 0101")
            if any(c not in "01" for c in args.outcomes):
                raise _UsageError("--outcomes must be a string of 0 and 1")
            results = [run_pattern(pattern, psi, "branch", outcomes=[int(c) for c in args.outcomes])]
        else:
            rng = np.random.default_rng(seed)
            results = [run_pattern(pattern, psi, "sample", rng=rng) for _ in range(args.trials)]
    except TooManyBranches as exc:
        _err(str(exc))
        return EXIT_TOO_MANY
    except ImpossibleOutcome as exc:
        _err(str(exc))
        return EXIT_IMPOSSIBLE
    except ValueError as exc:
        _err(f"invalid input: {exc}")
        return EXIT_INVALID
    doc = {"mode": args.mode, "measurements": pattern.measurement_count,
           "results": [docs.run_result_to_doc(r) for r in results]}
    if args.mode == "sample":
        doc["seed"] = seed
    _emit(doc)
    return EXIT_OK


def cmd_povm(args) -> int:
    try:
        spec = docs.povm_from_doc(_read(args.spec))
    except InvalidPovm as exc:
        _err(f"invalid POVM: {exc}")
        return EXIT_INVALID
    psi = _state(args.state)
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        result = povm_neumark(spec, psi, args.qubit, seed=seed)
    except ValueError as exc:
        _err(f"invalid POVM input: {exc}")
        return EXIT_INVALID
    _emit({"probabilities": [float(p) for p in result.probabilities],
           "measurement_count": result.measurement_count})
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import acceptance

    if args.level == "quick":
        checks = acceptance.quick_suite()
    elif args.level == "full":
        checks = acceptance.full_suite(jobs=args.jobs)
    else:
        _err(f"unknown level {args.level!r}; use quick or full")
        return EXIT_PARSE
    for c in checks:
        print(c.line(timing=False))
        print(f"  {c.number}: {c.seconds:.2f}s", file=sys.stderr)
    failed = [c for c in checks if not c.passed]
    if failed:
        print("failure manifest:")
        for c in failed:
            print(f"  criterion {c.number} ({c.name}): {c.detail}")
        return EXIT_SELFTEST
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adqc", description="Ancilla-driven quantum computation toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", help="classify a 4x4 coupling matrix")
    c.add_argument("path")
    c.add_argument("--tol", type=float, default=BOUNDARY_TOL, help="class boundary tolerance")
    c.add_argument("--grid", type=int, default=32, help="witness search grid points per axis")
    c.add_argument("--jobs", type=int, default=1, help="worker processes for the witness search")
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("compile", help="compile a circuit document into a pattern")
    c.add_argument("circuit")
    c.add_argument("--out", help="pattern output file; without it the pattern goes to stdout")
    c.set_defaults(func=cmd_compile)

    c = sub.add_parser("simulate", help="run a pattern")
    c.add_argument("pattern")
    c.add_argument("--input", required=True, help="basis label such as 0, ++, +0- or a state file")
    c.add_argument("--mode", choices=("sample", "branch", "enumerate"), default="sample")
    c.add_argument("--seed", type=int)
    c.add_argument("--trials", type=int, default=1, help="number of sampled runs")
    c.add_argument("--outcomes", help="forced outcome bits for branch mode")
    c.set_defaults(func=cmd_simulate)

    c = sub.add_parser("povm", help="realize a POVM through a Neumark dilation")
    c.add_argument("spec")
    c.add_argument("--state", required=True)
    c.add_argument("--qubit", type=int, default=0)
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_povm)

    c = sub.add_parser("selftest", help="run acceptance suites")
    c.add_argument("--level", default="quick", help="quick or full")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_selftest)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        _err(str(exc))
        return EXIT_PARSE
    except docs.DocumentError as exc:
        _err(str(exc))
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
