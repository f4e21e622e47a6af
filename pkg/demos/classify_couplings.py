"""Which fixed couplings can drive universal computation?

Local gates do not change the answer, so the classifier reduces each coupling
to its canonical parameters and then looks for ancilla settings that make both
measurement branches unitary.
"""

import numpy as np

from adqc import classify
from adqc.kak import canonical_d
from adqc.linalg import CZ, CZ_SWAP, random_unitary

rng = np.random.default_rng(3)


def dressed(u):
    a = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    b = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    return a @ u @ b


couplings = {
    "dressed CZ": dressed(CZ),
    "CZ then SWAP": CZ_SWAP,
    "partial Ising": canonical_d(np.pi / 8, 0, 0),
    "partial Heisenberg": canonical_d(np.pi / 4, 0.3, 0),
    "generic": dressed(canonical_d(0.5, 0.3, 0.1)),
}
for name, e in couplings.items():
    r = classify(e)
    alphas = np.round(r.canonical.alphas, 4)
    print(f"{name:20s} {r.interaction_class.value:26s} alphas={alphas} universal={r.universal}")
    if r.failure_reasons:
        for flag, why in r.failure_reasons.items():
            print(f"{'':20s}   {flag}: {why}")
