"""Freezing an unknown qubit state with measure-and-correct feedback.

With the whole decay observed through a squeezed homodyne channel, the
ensemble drifts away from the initial state at a rate that shrinks like 1/s,
where s is the amplification factor of the squeezed quadrature.
Run with ``python demos/squeezed_feedback.py`` (about a minute).
"""

import numpy as np

from qfsim import linops as lo
from qfsim.control import ControlScheme, ensemble_freezing_error, run_control_ensemble
from qfsim.lindblad import make_decay_generator
from qfsim.squeeze import make_squeeze
from qfsim.stats import loglog_slope

rho0 = lo.ket_to_dm(np.array([1, 1j]) / np.sqrt(2))
gen = make_decay_generator(0.0, 1.0)
dt = 5e-4

s_vals, errs = [], []
print("   n        s     freezing error")
for n in (0, 1, 4, 16):
    sq = make_squeeze(n, np.sqrt(n * (n + 1)))
    run = run_control_ensemble(ControlScheme("squeezed", dt, sq), gen, rho0, 1.0, dt, 3000, seed=3)
    s_vals.append(sq.s)
    errs.append(ensemble_freezing_error(run, rho0))
    print(f"{n:4d}  {sq.s:7.2f}     {errs[-1]:.3e}")
print(f"log-log slope {loglog_slope(np.array(s_vals), np.array(errs)):.2f}")
