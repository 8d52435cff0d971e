#!/usr/bin/env python3
"""Boundary-constrained polynomial pulses and a random parameter search.

The pulse is pinned to zero value, slope and curvature at both endpoints
and passes through chosen fixed points; with two fixed points it is the
7th-order polynomial whose closed form appears in the docs. Searching the
fixed-point box randomly performs about as well as a brute-force grid.
"""

import numpy as np

from spinctrl import (
    ControlProblem,
    PolynomialFamily,
    PropagationSettings,
    SearchBox,
    SpinChainSpec,
    solve_polynomial,
)
from spinctrl.optimizers import grid_search, random_search

pulse = solve_polynomial((-0.4, 1.0), t_f=1.0)
print("two-point pulse, lambda = (-0.4, 1.0):")
print(f"  g(1/3) = {float(pulse(1/3)):+.6f}   g(2/3) = {float(pulse(2/3)):+.6f}")
print(f"  monomial coefficients: {np.round(pulse.coefficients, 3)}")

rng = np.random.default_rng(5)
spec = SpinChainSpec(4, tuple(rng.uniform(-1, 1, 4)))
problem = ControlProblem.for_chain(spec, t_f=1.0)
family = PolynomialFamily(t_f=1.0, n_lambda=2)
settings = PropagationSettings(substeps=256, adaptive=False, method="splitstep")

box = SearchBox(bounds=((-30.0, 30.0), (-30.0, 30.0)), resolution=(21, 21))
grid_out = grid_search(problem, family, box, settings)
print(f"\n21x21 grid search : best F = {grid_out.best.fidelity:.4f} "
      f"at lambda = {np.round(grid_out.best.params, 2)}")

rand_out = random_search(problem, family, SearchBox(box.bounds), n_guesses=441, seed=9,
                         settings=settings)
print(f"441 random guesses: best F = {rand_out.fidelity:.4f} "
      f"at lambda = {np.round(rand_out.params, 2)}")

# four fixed points widen the search space the same way
family4 = PolynomialFamily(t_f=1.0, n_lambda=4)
rand4 = random_search(problem, family4, SearchBox(((-30.0, 30.0),) * 4), n_guesses=441,
                      seed=9, settings=settings)
print(f"4 fixed points    : best F = {rand4.fidelity:.4f}")
