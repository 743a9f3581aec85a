"""Miniature fidelity-vs-measurement-fraction experiment (d=5).

For each fraction of the d^4 informationally complete budget, draw fresh
random projectors and Poisson-noisy counts from a nonuniform downconversion
state, reconstruct with and without correction, and score the fidelity with
the maximally entangled target. Desk-scale version of the full d=7 sweep run
by the acceptance suite (and by `cstomo sweep`).
"""

from cstomo import (
    SweepSpec,
    fidelity_pure,
    make_downconversion_state,
    make_max_entangled,
    run_sweep,
    state_to_density,
    summarize_sweep,
)

d = 5
truth = make_downconversion_state(d, 2.5)
target = make_max_entangled(d)
ceiling = fidelity_pure(state_to_density(truth), target)
print(f"simulated source: downconversion spectrum, width 2.5")
print(f"fidelity ceiling F(truth, target) = {ceiling:.4f}\n")

spec = SweepSpec(
    d=d,
    fractions=[0.1, 0.2, 0.3, 0.45, 0.6],
    repeats=3,
    mean_total_counts=2e3,
    seed=0,
    state=truth,
)
rows = run_sweep(spec)

print(f"{'fraction':>9} {'raw':>8} {'corrected':>10}")
for entry in summarize_sweep(rows):
    print(f"{entry['fraction']:>9.2f} {entry['fidelity_raw_mean']:>8.4f} "
          f"{entry['fidelity_corrected_mean']:>10.4f}")
