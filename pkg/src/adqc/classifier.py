"""
Which fixed couplings can steer a register deterministically and universally.

A coupling is judged by its Weyl-chamber angles. Step-wise determinism is
certified by a *witness*: ancilla parameters whose two Kraus operators are
proportional to unitaries, related by a generalized Pauli, with that Pauli
pushed through the non-local core as a product of local corrections.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .kak import CanonicalForm, canonical_d, kak_decompose
from .kernel import (
    AncillaParams,
    GeneralizedPauli,
    NotUnitaryBranch,
    TensorCommutation,
    branching_relation,
    kraus_pair,
    pauli_coefficients,
    tensor_commute,
)
from .linalg import DECOMP_ATOL, I2, X, Y, Z, dagger, is_unitary

BOUNDARY_TOL = 1e-6
WITNESS_TOL = 1e-8
EXACT_MERIT = 1e-10
QUARTER = np.pi / 4


class InteractionClass(str, enum.Enum):
    ISING_MAXIMAL = "IsingMaximal"
    HEISENBERG_XX_MAXIMAL = "HeisenbergXXMaximal"
    ISING_PARTIAL = "IsingPartial"
    HEISENBERG_PARTIAL = "HeisenbergPartial"
    NOT_STEPWISE_DETERMINISTIC = "NotStepwiseDeterministic"


UNIVERSAL_CLASSES = frozenset({InteractionClass.ISING_MAXIMAL, InteractionClass.HEISENBERG_XX_MAXIMAL})

NOT_UNIVERSAL_PLANE = (
    "partial-strength Ising coupling: the steerable single-qubit unitaries are "
    "confined to one plane of the Bloch sphere, so the coupling is not universal"
)
NOT_COMPOSABLE = (
    "partial-strength Heisenberg-XX coupling: successive single-qubit steps "
    "cannot be chained while keeping every step deterministic"
)


def class_from_alphas(alphas, tol: float = BOUNDARY_TOL) -> InteractionClass:
    """Map chamber angles to one of the five classes."""
    ax, ay, az = alphas
    if abs(az) >= tol:
        return InteractionClass.NOT_STEPWISE_DETERMINISTIC
    x_max, y_max = abs(ax - QUARTER) < tol, abs(ay - QUARTER) < tol
    x_zero, y_zero = abs(ax) < tol, abs(ay) < tol
    if x_max and y_max:
        return InteractionClass.HEISENBERG_XX_MAXIMAL
    if x_max and y_zero:
        return InteractionClass.ISING_MAXIMAL
    if y_zero and not x_zero:
        return InteractionClass.ISING_PARTIAL
    if x_max:
        return InteractionClass.HEISENBERG_PARTIAL
    return InteractionClass.NOT_STEPWISE_DETERMINISTIC


# ---------------------------------------------------------------------------
# witness verification (scalar path, built from the kernel operations)


@dataclass(frozen=True)
class Witness:
    params: AncillaParams
    branch: GeneralizedPauli
    delta: float
    commutation: TensorCommutation


def verify_witness(alphas, params: AncillaParams, tol: float = WITNESS_TOL) -> Optional[Witness]:
    """Check all three step-wise determinism conditions at one parameter point."""
    pair = kraus_pair(canonical_d(*alphas), params)
    try:
        rel = branching_relation(pair, tol)
    except NotUnitaryBranch:
        return None
    if rel is None:
        return None
    tc = tensor_commute(alphas, rel[0], tol)
    if tc is None:
        return None
    return Witness(params, rel[0], rel[1], tc)


# ---------------------------------------------------------------------------
# vectorized grid evaluation


def grid_axes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Polar angles ``k pi / n`` and azimuths ``2 pi k / n`` for ``k < n``."""
    k = np.arange(n)
    return k * np.pi / n, k * 2 * np.pi / n


def _grid_vectors(n: int):
    polar, azim = grid_axes(n)
    g, d = np.meshgrid(polar, azim, indexing="ij")
    g, d = g.ravel(), d.ravel()
    prep = np.stack([np.cos(g / 2), np.exp(1j * d) * np.sin(g / 2)], axis=1)
    m_plus = np.stack([np.cos(g / 2), np.exp(1j * d) * np.sin(g / 2)], axis=1)
    m_minus = np.stack([np.sin(g / 2), -np.exp(1j * d) * np.cos(g / 2)], axis=1)
    return prep, m_plus, m_minus


def _unitarity_defect(k00, k01, k10, k11) -> np.ndarray:
    """``1 - s_min / s_max`` for stacks of 2x2 matrices given entry-wise (1 for zero)."""
    f = (k00.real ** 2 + k00.imag ** 2 + k01.real ** 2 + k01.imag ** 2
         + k10.real ** 2 + k10.imag ** 2 + k11.real ** 2 + k11.imag ** 2)
    det = np.abs(k00 * k11 - k01 * k10)
    r = np.sqrt(np.maximum(f ** 2 - 4 * det ** 2, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sqrt(np.maximum(f - r, 0.0) / (f + r))
    return np.where(f > 1e-300, 1.0 - ratio, 1.0)


def _conjugated_pauli_coefficients(alphas) -> np.ndarray:
    d = canonical_d(*alphas)
    return np.array([pauli_coefficients(d @ np.kron(I2, p) @ dagger(d)).real for p in (X, Y, Z)])


def _rank_forms(alphas) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic and quartic forms giving ``|M(n)|_F^2`` and ``|M M^T|_F^2``
    for ``M(n) = sum_k n_k M_k``, flattened over index pairs."""
    mk = _conjugated_pauli_coefficients(alphas)
    quad = np.einsum("kab,lab->kl", mk, mk).reshape(9)
    prod = np.einsum("kab,lcb->klac", mk, mk)
    quart = np.einsum("klac,mnac->klmn", prod, prod).reshape(9, 9)
    return quad, quart


def _kraus_chunks(alphas, n: int, chunk: int):
    """Yield entry-wise Kraus stacks ``(start, K+, K-)``; each K is a tuple of
    four ``(preps, meas)`` arrays ``(k00, k01, k10, k11)``."""
    prep, m_plus, m_minus = _grid_vectors(n)
    # t[p, (i j), a] = sum_b D[a i, b j] prep[p, b]
    t = np.einsum("aibj,pb->pija", canonical_d(*alphas).reshape(2, 2, 2, 2), prep).reshape(-1, 4, 2)
    mp, mm = m_plus.conj().T.copy(), m_minus.conj().T.copy()
    for start in range(0, len(prep), chunk):
        tt = t[start:start + chunk]
        kp = np.matmul(tt, mp)
        km = np.matmul(tt, mm)
        yield start, tuple(kp[:, i] for i in range(4)), tuple(km[:, i] for i in range(4))


def unitary_kraus_mask(alphas, n: int = 64, tol: float = 1e-6, chunk: int = 128) -> np.ndarray:
    """Boolean grid ``[prep, meas]`` marking points where both Kraus operators are
    proportional to unitaries (relative singular-value spread below ``tol``)."""
    out = np.zeros((n * n, n * n), dtype=bool)
    for start, kp, km in _kraus_chunks(alphas, n, chunk):
        out[start:start + len(kp[0])] = (_unitarity_defect(*kp) <= tol) & (_unitarity_defect(*km) <= tol)
    return out


def grid_merit(alphas, n: int = 32, chunk: int = 128) -> np.ndarray:
    """Sum of the three condition defects on the ``n^4`` grid, shape ``(n*n, n*n)``.

    Rows index the preparation ``(gamma, delta)``, columns the measurement
    ``(theta, phi)``, both in row-major order of ``grid_axes``. Each defect
    lies in ``[0, 1]`` and vanishes exactly when its condition holds.
    """
    quad, quart = _rank_forms(alphas)
    merit = np.empty((n * n, n * n))
    for start, (p00, p01, p10, p11), (m00, m01, m10, m11) in _kraus_chunks(alphas, n, chunk):
        total = _unitarity_defect(p00, p01, p10, p11) + _unitarity_defect(m00, m01, m10, m11)
        fp = sum(np.abs(k) ** 2 for k in (p00, p01, p10, p11))
        fm = sum(np.abs(k) ** 2 for k in (m00, m01, m10, m11))
        norm = np.sqrt(np.maximum(fp * fm, 1e-300)) / 2
        # connector K- K+^dag, normalized to be (nearly) unitary
        c00 = (m00 * p00.conj() + m01 * p01.conj()) / norm
        c01 = (m00 * p10.conj() + m01 * p11.conj()) / norm
        c10 = (m10 * p00.conj() + m11 * p01.conj()) / norm
        c11 = (m10 * p10.conj() + m11 * p11.conj()) / norm
        total += np.minimum(np.abs(c00 + c11) / 2, 1.0)
        root = np.sqrt(c01 * c10 - c00 * c11)
        root = np.where(np.abs(root) > 1e-300, root, 1.0)
        nvec = np.stack([
            np.real((c01 + c10) / (2 * root)),
            np.real(1j * (c01 - c10) / (2 * root)),
            np.real((c00 - c11) / (2 * root)),
        ], axis=-1)
        nn = (nvec[..., :, None] * nvec[..., None, :]).reshape(nvec.shape[:-1] + (9,))
        f2 = nn @ quad
        f4 = np.einsum("...i,...i->...", nn @ quart, nn)
        with np.errstate(invalid="ignore", divide="ignore"):
            rank_defect = 1.0 - np.sqrt(np.maximum(f4, 0.0)) / f2
        total += np.where(f2 > 1e-300, rank_defect, 1.0)
        merit[start:start + len(p00)] = total
    return np.nan_to_num(merit, nan=4.0)


def _params_at(index: int, n: int) -> AncillaParams:
    polar, azim = grid_axes(n)
    prep, meas = divmod(int(index), n * n)
    return AncillaParams(
        gamma=float(polar[prep // n]), delta=float(azim[prep % n]),
        theta=float(polar[meas // n]), phi=float(azim[meas % n]),
    )


# ---------------------------------------------------------------------------
# local refinement


def _residuals(x, d4, mk):
    p = AncillaParams(*x)
    t = np.einsum("aibj,b->aij", d4, p.preparation())
    m_plus, m_minus = p.measurement()
    kp = np.einsum("a,aij->ij", m_plus.conj(), t)
    km = np.einsum("a,aij->ij", m_minus.conj(), t)
    out = []
    scales = []
    for k in (kp, km):
        g = dagger(k) @ k
        s = max(np.real(np.trace(g)) / 2, 1e-300)
        scales.append(np.sqrt(s))
        dev = g / s - I2
        out += [dev[0, 0].real, dev[0, 1].real, dev[0, 1].imag]
    conn = km @ dagger(kp) / (scales[0] * scales[1])
    tr = np.trace(conn) / 2
    out += [tr.real, tr.imag]
    w = np.array([np.trace(q @ conn) / 2 for q in (X, Y, Z)])
    root = np.sqrt(-np.linalg.det(conn))
    nvec = np.real(w / root) if abs(root) > 1e-300 else np.zeros(3)
    m = np.tensordot(nvec, mk, axes=1)
    u, sv, vh = np.linalg.svd(m)
    out += list((m - sv[0] * np.outer(u[:, 0], vh[0])).ravel())
    return np.array(out)


def _refine(alphas, start: AncillaParams, tol: float) -> Optional[Witness]:
    hit = verify_witness(alphas, start, tol)
    if hit is not None:
        return hit
    d4 = canonical_d(*alphas).reshape(2, 2, 2, 2)
    mk = _conjugated_pauli_coefficients(alphas)
    try:
        sol = least_squares(
            _residuals, np.array(start.as_tuple()), args=(d4, mk),
            method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400,
        )
    except (ValueError, np.linalg.LinAlgError):
        return None
    g, d, th, ph = sol.x
    return verify_witness(alphas, AncillaParams(float(g), float(d), float(th), float(ph)), tol)


def _refine_job(args):
    return _refine(*args)


def search_ancilla_params(
    alphas,
    grid: int = 32,
    candidates: int = 24,
    tol: float = WITNESS_TOL,
    jobs: int = 1,
) -> Optional[Witness]:
    """Find ancilla parameters certifying step-wise determinism for ``D(alphas)``.

    The ``grid^4`` merit is evaluated first. Grid points with vanishing merit
    are verified directly in lexicographic (gamma, delta, theta, phi) order;
    otherwise the ``candidates`` best points are refined in that same order.
    The first point that verifies at ``tol`` wins. With ``jobs > 1`` all
    candidates are refined in parallel and the same winner is selected.
    """
    alphas = tuple(float(a) for a in alphas)
    merit = grid_merit(alphas, grid).ravel()
    for i in np.flatnonzero(merit <= EXACT_MERIT)[:256]:
        hit = verify_witness(alphas, _params_at(i, grid), tol)
        if hit is not None:
            return hit
    candidates = min(candidates, merit.size)
    best = np.argpartition(merit, candidates - 1)[:candidates]
    order = np.sort(best)
    starts = [_params_at(i, grid) for i in order]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_refine_job, [(alphas, s, tol) for s in starts]))
        return next((r for r in results if r is not None), None)
    for s in starts:
        hit = _refine(alphas, s, tol)
        if hit is not None:
            return hit
    return None


# ---------------------------------------------------------------------------
# the classifier


@dataclass
class ClassificationReport:
    canonical: CanonicalForm
    interaction_class: InteractionClass
    universal: bool
    stepwise_deterministic: bool
    composable: bool
    witness: Optional[Witness] = None
    failure_reasons: dict = field(default_factory=dict)

    @property
    def witness_params(self) -> Optional[AncillaParams]:
        return None if self.witness is None else self.witness.params

    @property
    def witness_branch(self) -> Optional[GeneralizedPauli]:
        return None if self.witness is None else self.witness.branch

    @property
    def failure_reason(self) -> Optional[str]:
        if not self.failure_reasons:
            return None
        return "; ".join(f"{k}: {v}" for k, v in self.failure_reasons.items())


def classify(e: np.ndarray, grid: int = 32, jobs: int = 1, tol: float = BOUNDARY_TOL) -> ClassificationReport:
    """Decompose ``e``, name its class and search for a determinism witness."""
    e = np.asarray(e, dtype=complex)
    if e.shape != (4, 4) or not is_unitary(e, DECOMP_ATOL):
        raise ValueError("classify needs a 4x4 unitary")
    form = kak_decompose(e)
    cls = class_from_alphas(form.alphas, tol)
    witness = search_ancilla_params(form.alphas, grid=grid, jobs=jobs)
    stepwise = witness is not None
    reasons = {}
    if not stepwise:
        if abs(form.alpha_z) >= tol:
            reasons["stepwise_deterministic"] = (
                f"alpha_z = {form.alpha_z:.3g} is nonzero; no ancilla setting gives "
                "two Kraus operators proportional to unitaries"
            )
        else:
            reasons["stepwise_deterministic"] = "no ancilla parameters satisfy all determinism conditions"
    composable = stepwise and cls is not InteractionClass.HEISENBERG_PARTIAL
    if cls is InteractionClass.HEISENBERG_PARTIAL:
        reasons["composable"] = NOT_COMPOSABLE
    elif not stepwise:
        reasons["composable"] = "steps are not deterministic, so nothing can be composed"
    universal = cls in UNIVERSAL_CLASSES and stepwise
    if not universal:
        if cls is InteractionClass.ISING_PARTIAL:
            reasons["universal"] = NOT_UNIVERSAL_PLANE
        elif cls is InteractionClass.HEISENBERG_PARTIAL:
            reasons["universal"] = "not universal: " + NOT_COMPOSABLE
        elif cls in UNIVERSAL_CLASSES:
            reasons["universal"] = "maximal coupling but the witness search failed"
        else:
            reasons["universal"] = "coupling is not locally equivalent to a maximal Ising or Heisenberg-XX core"
    return ClassificationReport(form, cls, universal, stepwise, composable, witness, reasons)


def classify_many(matrices, grid: int = 32, jobs: int = 1) -> list[ClassificationReport]:
    """Classify a batch, fanning instances out over ``jobs`` processes."""
    if jobs <= 1:
        return [classify(m, grid=grid) for m in matrices]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_classify_job, [(m, grid) for m in matrices]))


def _classify_job(args):
    return classify(args[0], grid=args[1])
