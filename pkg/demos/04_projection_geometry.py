"""The projection stage, step by step.

Every measurement pins the vectorized state to one hyperplane. After
orthonormalizing the system (which preserves its solution set), a single
sequential pass of hyperplane projections lands exactly on the intersection
of all of them, i.e. the orthogonal projection onto the full solution
subspace, and Hermitian iterates stay Hermitian along the way.
"""

import numpy as np

from cstomo import (
    kaczmarz_sweep,
    make_max_entangled,
    mat,
    measurement_rows,
    orthogonalize,
    project_hyperplane,
    simulate_measurements,
    vec,
)
from cstomo.linalg import hermiticity_error

d = 3
ms = simulate_measurements(d, 12, state=make_max_entangled(d), seed=2)
rows = measurement_rows(ms)
print(f"{len(ms)} measurements over a {rows.shape[1]}-dimensional vector space")

system = orthogonalize(rows, ms.probs)
gram = system.rows.conj() @ system.rows.T
print(f"orthonormality after Gram-Schmidt: max |G - I| = "
      f"{np.abs(gram - np.eye(system.n_rows)).max():.2e}")

# start from the maximally mixed state and project constraint by constraint
x = vec(np.eye(d * d, dtype=complex) / (d * d))
for i in range(system.n_rows):
    x = project_hyperplane(x, system.rows[i].conj(), system.probs_prime[i])
    satisfied = np.abs(system.rows[: i + 1] @ x - system.probs_prime[: i + 1]).max()
    print(f"after projection {i + 1:2d}: worst violation of the first "
          f"{i + 1:2d} constraints = {satisfied:.2e}")

print(f"\nHermiticity drift of the final iterate: {hermiticity_error(mat(x)):.2e}")

# the one-call sweep is the same sequential pass
sweep_out = kaczmarz_sweep(vec(np.eye(d * d, dtype=complex) / (d * d)), system)
print(f"sweep equals the manual pass: {np.abs(sweep_out - x).max():.2e}")
