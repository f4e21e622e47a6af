"""A three-outcome trine measurement on a qubit, built from ancilla steps.

The POVM is dilated onto one extension qubit, the dilation unitary is
synthesised as an ancilla pattern, and both qubits are then read out remotely.
"""

import numpy as np

from adqc import PovmSpec, povm_neumark

vecs = [np.array([np.cos(a / 2), np.sin(a / 2)]) for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
trine = PovmSpec(tuple(2 / 3 * np.outer(v, v) for v in vecs))

for label, psi in (("|0>", np.array([1, 0])), ("|1>", np.array([0, 1])), ("|+>", np.array([1, 1]) / np.sqrt(2))):
    psi = psi.astype(complex)
    r = povm_neumark(trine, psi, seed=0)
    born = [float(np.vdot(psi, e @ psi).real) for e in trine.elements]
    print(label, "pattern:", np.round(r.probabilities, 6), "Born:", np.round(born, 6))
print("measurements in the dilation pattern:", r.measurement_count)
