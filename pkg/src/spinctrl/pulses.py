"""The four control-pulse families and their parameter-to-shape solvers.

All pulses are real-valued functions of time on [0, t_f], callable on
scalars or numpy arrays:

* ``GaussianPulse``     -- amplitude * Gaussian envelope * sin^2 modulation.
* ``PolynomialPulse``   -- degree-(N_lambda + 5) polynomial pinned to zero
  value/slope/curvature at both endpoints and passing through N_lambda
  user-chosen interior fixed points.
* ``PiecewiseConstantPulse`` -- bin values on a uniform grid (the form the
  gradient optimizer works in, and the exact-propagation fast path).
* ``DressedPulse``      -- a base pulse plus random-frequency Fourier
  dressing terms under a sin^2 boundary envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .csvio import write_csv

#: relative slack when validating t against [0, t_f]
_T_SLACK = 1e-9


def _check_times(t, t_f: float):
    t = np.asarray(t, dtype=float)
    slack = _T_SLACK * max(t_f, 1.0)
    if t.size and (t.min() < -slack or t.max() > t_f + slack):
        raise ValueError(f"time outside [0, {t_f}]: range [{t.min()}, {t.max()}]")
    return t


@dataclass(frozen=True)
class GaussianPulse:
    """a * exp(-32 (t - t_f/2)^2 / t_f^2) * sin^2(2 pi t omega / t_f).

    Vanishes exactly at t = 0; at t = t_f the envelope leaves a residual
    of at most |a| e^{-8}, which is accepted as-is.
    """

    amplitude: float
    omega: float
    t_f: float

    def __post_init__(self):
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")

    def __call__(self, t):
        t = _check_times(t, self.t_f)
        envelope = np.exp(-32.0 * (t - self.t_f / 2.0) ** 2 / self.t_f**2)
        return self.amplitude * envelope * np.sin(2.0 * np.pi * t * self.omega / self.t_f) ** 2


@dataclass(frozen=True)
class PolynomialPulse:
    """sum_j a_j t^j with zero value, slope and curvature at both endpoints.

    ``coefficients[j]`` multiplies t^j (so coefficients[0] == 0); build via
    :func:`solve_polynomial`, which also records the interior fixed points.
    """

    coefficients: tuple[float, ...]
    t_f: float
    lambdas: tuple[float, ...] = ()

    @property
    def nodes(self) -> np.ndarray:
        n = len(self.lambdas)
        return np.arange(1, n + 1) * self.t_f / (n + 1)

    def __call__(self, t):
        t = _check_times(t, self.t_f)
        return np.polynomial.polynomial.polyval(t, np.asarray(self.coefficients))


@dataclass(frozen=True)
class PiecewiseConstantPulse:
    """Constant value per bin; t in [t_{j-1}, t_j) maps to bin j, t_f to the last."""

    values: tuple[float, ...]
    t_f: float

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("need at least one bin")
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def n_bins(self) -> int:
        return len(self.values)

    @property
    def dt(self) -> float:
        return self.t_f / self.n_bins

    def __call__(self, t):
        t = _check_times(t, self.t_f)
        idx = np.clip((t / self.dt).astype(int), 0, self.n_bins - 1)
        return np.asarray(self.values)[idx]


class DressingTerm(NamedTuple):
    c_cos: float
    c_sin: float
    frequency: float


@dataclass(frozen=True)
class DressedPulse:
    """base(t) + envelope(t) * sum_i [c_cos,i cos(w_i t) + c_sin,i sin(w_i t)].

    The sin^2(pi t / t_f) envelope (on by default) forces the dressing to
    vanish exactly at both endpoints, so the dressed pulse inherits the
    base pulse's boundary values.
    """

    t_f: float
    base: "Pulse | None" = None
    terms: tuple[DressingTerm, ...] = ()
    envelope: bool = True

    def dressing(self, t):
        t = _check_times(t, self.t_f)
        total = np.zeros_like(t, dtype=float)
        for c_cos, c_sin, w in self.terms:
            total += c_cos * np.cos(w * t) + c_sin * np.sin(w * t)
        if self.envelope:
            # masked so the dressing vanishes exactly at both endpoints
            # (sin(pi) itself only rounds to ~1e-16)
            total *= np.where(
                (t <= 0.0) | (t >= self.t_f), 0.0, np.sin(np.pi * t / self.t_f) ** 2
            )
        return total

    def __call__(self, t):
        t = _check_times(t, self.t_f)
        base = self.base(t) if self.base is not None else np.zeros_like(t, dtype=float)
        return base + self.dressing(t)


Pulse = Union[GaussianPulse, PolynomialPulse, PiecewiseConstantPulse, DressedPulse]


def solve_polynomial(lambdas, t_f: float) -> PolynomialPulse:
    """Fit the unique degree-(N_lambda + 5) polynomial through the fixed points.

    Zero value, slope and curvature at both endpoints are exactly a triple
    root at each end, so in the scaled variable tau = t / t_f the pulse is
    tau^3 (tau - 1)^3 h(tau) with h of degree N_lambda - 1. Only the small
    node-interpolation system for h is solved, which stays well conditioned
    where the raw degree-(N_lambda + 5) monomial system would not.
    """
    lambdas = tuple(float(x) for x in lambdas)
    n_lam = len(lambdas)
    if n_lam < 1:
        raise ValueError("need at least one fixed point")
    if t_f <= 0:
        raise ValueError("t_f must be positive")
    taus = np.arange(1, n_lam + 1) / (n_lam + 1)
    base_at_nodes = taus**3 * (taus - 1.0) ** 3
    matrix = taus[:, None] ** np.arange(n_lam)
    rhs = np.asarray(lambdas) / base_at_nodes
    try:
        h = np.linalg.solve(matrix, rhs)
        h += np.linalg.solve(matrix, rhs - matrix @ h)  # one refinement pass
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular fixed-point system for nodes {taus}") from exc
    residual = np.linalg.norm(matrix @ h - rhs)
    if residual > 1e-10 * max(np.linalg.norm(rhs), 1.0):
        raise ArithmeticError(f"fixed-point solve residual {residual:.3e} too large")
    poly = np.polynomial.Polynomial
    full = poly([0.0, 1.0]) ** 3 * poly([-1.0, 1.0]) ** 3 * poly(h)
    coeffs = np.zeros(n_lam + 6)
    coeffs[: full.coef.size] = full.coef
    coeffs /= t_f ** np.arange(n_lam + 6)
    return PolynomialPulse(coefficients=tuple(coeffs), t_f=t_f, lambdas=lambdas)


def make_random_basis(
    rng: np.random.Generator, n_components: int, t_f: float, principal_max: int = 10
) -> np.ndarray:
    """Draw dressing frequencies w_i = (n_i + r_i) pi / t_f.

    n_i is a uniform integer harmonic in 1..principal_max and r_i a uniform
    jitter in [-0.5, 0.5]; the same generator state always yields the same
    basis.
    """
    if n_components < 1:
        raise ValueError("need at least one basis component")
    harmonics = rng.integers(1, principal_max + 1, size=n_components)
    jitter = rng.uniform(-0.5, 0.5, size=n_components)
    return (harmonics + jitter) * np.pi / t_f


def bin_midpoints(t_f: float, n_bins: int) -> np.ndarray:
    return (np.arange(n_bins) + 0.5) * (t_f / n_bins)


def sample_to_bins(pulse: Pulse, n_bins: int) -> PiecewiseConstantPulse:
    """Discretize any pulse to bin-midpoint values on a uniform grid."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    values = np.asarray(pulse(bin_midpoints(pulse.t_f, n_bins)), dtype=float)
    return PiecewiseConstantPulse(values=tuple(values), t_f=pulse.t_f)


def pulse_samples(pulse: Pulse, n_points: int = 512) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, pulse.t_f, n_points)
    return t, np.asarray(pulse(t), dtype=float)


def write_pulse_csv(pulse: Pulse, path: str, n_points: int = 512, label: str = "") -> None:
    """Emit (t, g) samples on a uniform grid for figure scripts."""
    t, g = pulse_samples(pulse, n_points)
    meta = {"t_f": pulse.t_f}
    if label:
        meta["label"] = label
    write_csv(path, "spinctrl.pulse.v1", ["t", "g"], zip(t, g), meta=meta)


@dataclass(frozen=True)
class GaussianFamily:
    """Parameter vector (a, omega) -> GaussianPulse at fixed t_f."""

    t_f: float
    name: str = field(default="gaussian", init=False)
    param_names: tuple[str, ...] = field(default=("a", "omega"), init=False)

    def make(self, params) -> GaussianPulse:
        a, omega = params
        return GaussianPulse(amplitude=float(a), omega=float(omega), t_f=self.t_f)


@dataclass(frozen=True)
class PolynomialFamily:
    """Parameter vector (lambda_1..lambda_n) -> PolynomialPulse at fixed t_f."""

    t_f: float
    n_lambda: int = 2

    @property
    def name(self) -> str:
        return f"poly{self.n_lambda}"

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(f"lambda{k}" for k in range(1, self.n_lambda + 1))

    def make(self, params) -> PolynomialPulse:
        if len(params) != self.n_lambda:
            raise ValueError(f"expected {self.n_lambda} fixed points, got {len(params)}")
        return solve_polynomial(params, self.t_f)
