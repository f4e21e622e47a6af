"""Drive an arbitrary single-qubit gate through four ancilla measurements.

The register qubit is never measured. Each step couples a fresh ancilla with
E = (H x H) CZ, reads it in the xy plane, and the compiler adapts later angles
to the outcomes seen so far. Every branch ends on the same state.
"""

import numpy as np

from adqc import compile_single_qubit, euler_j, run_pattern
from adqc.linalg import equal_up_to_phase, random_state, random_unitary

rng = np.random.default_rng(11)
u = random_unitary(2, rng)
angles = euler_j(u)
print("J-chain angles (execution order):", np.round(angles.execution_angles(), 4))

pattern = compile_single_qubit(u, 0)
print("measurements:", pattern.measurement_count)

psi = random_state(1, rng)
want = u @ psi
for r in run_pattern(pattern, psi, "enumerate"):
    ok = equal_up_to_phase(r.final_state, want, 1e-10) is not None
    print(r.outcomes, f"p={r.branch_probability:.4f}", "match" if ok else "MISMATCH")
