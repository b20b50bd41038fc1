"""Counting with a strong local oscillator approaches homodyne detection.

The scaled click record ``eps * N_t - t / eps`` takes on the law of the
homodyne record ``Y_t`` as ``eps`` shrinks.
"""

from qfsim import linops as lo
from qfsim.filtering import FilterSpec, scaled_lo_record
from qfsim.lindblad import make_rf_generator
from qfsim.stats import run_ensemble

k = 0.5**0.5
gen = make_rf_generator(1.0, k, k)
n = 2000

hom = run_ensemble(FilterSpec("homodyne", 1e-3, 1.0), gen, lo.GROUND, n, seed=4,
                   save_every=1000, keep_records=True)
y = hom.records.sum(axis=1)
print(f"homodyne       Y_1: mean {y.mean():+.3f}  variance {y.var():.3f}")
for eps in (0.2, 0.1, 0.05):
    dt = min(1e-3, 0.02 * eps**2)
    # the kraus scheme samples the click law without binning
    spec = FilterSpec("lo_counting", dt, 1.0, eps=eps, scheme="kraus")
    run = run_ensemble(spec, gen, lo.GROUND, n, seed=5, save_every=spec.n_steps,
                       keep_records=True)
    y = scaled_lo_record(run.records, eps, dt).sum(axis=1)
    print(f"eps = {eps:<5}    Y_1: mean {y.mean():+.3f}  variance {y.var():.3f}")
