#!/usr/bin/env python3
"""A small fidelity landscape over the Gaussian pulse's (a, omega) box.

The full-resolution version of this picture (101 x 101) shows amplitude-
dominated high-fidelity bands at short final times; this desk-size scan
keeps the shape visible and runs in a few seconds.
"""

import numpy as np

from spinctrl import ControlProblem, GaussianFamily, PropagationSettings, SearchBox, SpinChainSpec
from spinctrl.harness import landscape_sweep, write_landscape_csv

rng = np.random.default_rng(1)
spec = SpinChainSpec(4, tuple(rng.uniform(-1, 1, 4)))
problem = ControlProblem.for_chain(spec, t_f=1.0)

box = SearchBox(bounds=((-50.0, 50.0), (0.02, 4.0)), resolution=(21, 21))
settings = PropagationSettings(substeps=256, adaptive=False, method="splitstep")
grid = landscape_sweep(problem, GaussianFamily(t_f=1.0), box, settings, trial=1)

write_landscape_csv(grid, "landscape_demo.csv")
print("wrote landscape_demo.csv")
print(f"best F = {grid.values.max():.4f} at "
      f"a = {grid.axes[0][np.unravel_index(grid.values.argmax(), grid.values.shape)[0]]:.1f}, "
      f"omega = {grid.axes[1][np.unravel_index(grid.values.argmax(), grid.values.shape)[1]]:.2f}")

# a rough text rendering, rows = amplitude, columns = frequency
levels = " .:-=+*#%@"
print("\n     omega ->")
for i, row in enumerate(grid.values):
    cells = "".join(levels[min(int(f * len(levels)), len(levels) - 1)] for f in row)
    print(f"a={grid.axes[0][i]:+6.1f} |{cells}|")
