"""Dense construction and spectral analysis of the random-coupling Ising ring.

The static system is a ring of N spin-1/2 sites with random nearest-neighbor
sigma^z sigma^z couplings, a transverse-field control term, and a small
degeneracy-breaking term:

    H0 = -sum_i J_{i,i+1} sz_i sz_{i+1}     (site N+1 wraps to site 1)
    H1 = -sum_i sx_i
    H2 = sz_1  (single-site breaker)  or  sum_i sz_i  (full-sum breaker)

Everything is dense and real symmetric; hbar = 1 and energies are
dimensionless. N <= 10 keeps the Hilbert dimension at 2^N <= 1024, where
exact diagonalization is cheap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HERMITICITY_TOL = 1e-12
SIGN_TOL = 1e-9
RESIDUAL_TOL = 1e-10
DEGENERACY_TOL = 1e-9

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


class Breaker(enum.Enum):
    """Which sigma^z term splits the spin-flip degeneracy of H0."""

    SINGLE_SITE_Z = "single"
    FULL_SUM_Z = "sum"


class IndexBase(enum.Enum):
    """Whether eigenstate indices count the ground state as 1 or 0."""

    ONE_BASED = 1
    ZERO_BASED = 0


@dataclass(frozen=True)
class SpinChainSpec:
    """Physical model parameters: ring size, coupling draw, breaker term.

    ``couplings[i]`` is the bond between sites i+1 and i+2 (1-based sites),
    with the last entry closing the ring back to site 1.
    """

    n_spins: int
    couplings: tuple[float, ...]
    beta: float = 0.001
    breaker: Breaker = Breaker.SINGLE_SITE_Z

    def __post_init__(self):
        if self.n_spins < 2:
            raise ValueError(f"need at least 2 spins, got {self.n_spins}")
        if len(self.couplings) != self.n_spins:
            raise ValueError(
                f"expected {self.n_spins} couplings (one per bond, periodic), "
                f"got {len(self.couplings)}"
            )
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))

    @property
    def dim(self) -> int:
        return 2**self.n_spins


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with sign-fixed real eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sign_fixed: bool = True

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def state(self, k: int, index_base: IndexBase = IndexBase.ONE_BASED) -> np.ndarray:
        """Eigenvector for index ``k`` under the given counting convention."""
        return self.eigenvectors[:, k - index_base.value]


class DegeneracyReport(NamedTuple):
    pair_count: int
    min_gap: float


@dataclass(frozen=True)
class SubspaceDefinition:
    """Index ranges (inclusive) of the source and destination eigenbands."""

    initial: tuple[int, int]
    target: tuple[int, int]
    index_base: IndexBase = IndexBase.ONE_BASED

    def __post_init__(self):
        k_n, k_m = self.initial
        k_l, k_s = self.target
        if not (k_n <= k_m and k_l <= k_s):
            raise ValueError("subspace ranges must be nondecreasing")
        if max(k_n, k_l) <= min(k_m, k_s):
            raise ValueError(f"subspace ranges {self.initial} and {self.target} overlap")

    @classmethod
    def canonical(
        cls, n_spins: int, index_base: IndexBase = IndexBase.ONE_BASED
    ) -> "SubspaceDefinition":
        """The bands at 3/16..6/16 and 11/16..14/16 of the sorted spectrum.

        These fractions give integer indices for every N >= 4 and place the
        two bands symmetrically about the middle of the spectrum (under
        one-based counting).
        """
        dim = 2**n_spins
        if (dim * 3) % 16:
            raise ValueError(f"canonical subspaces need 3*2^N/16 to be an integer; N={n_spins} is too small")
        k = dim // 16
        return cls(initial=(3 * k, 6 * k), target=(11 * k, 14 * k), index_base=index_base)

    def slices(self, dim: int) -> tuple[slice, slice]:
        """0-based array slices for the two ranges, bounds-checked."""
        off = self.index_base.value
        lo_i, hi_i = self.initial[0] - off, self.initial[1] - off
        lo_t, hi_t = self.target[0] - off, self.target[1] - off
        for lo, hi in ((lo_i, hi_i), (lo_t, hi_t)):
            if lo < 0 or hi >= dim:
                raise ValueError(
                    f"subspace range out of bounds for dim {dim} "
                    f"({self.index_base.name.lower()} indices)"
                )
        return slice(lo_i, hi_i + 1), slice(lo_t, hi_t + 1)


@dataclass(frozen=True)
class BoundaryStates:
    """Equal-weight superpositions over the two eigenbands, plus projectors."""

    psi_i: np.ndarray
    psi_f: np.ndarray
    p_i: np.ndarray
    p_f: np.ndarray
    normalization: float


def site_operator(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Embed a single-site operator at ``site`` (0-based) into the full space."""
    out = np.ones((1, 1))
    for i in range(n_spins):
        out = np.kron(out, op if i == site else np.eye(2))
    return out


def two_site_operator(
    op_a: np.ndarray, site_a: int, op_b: np.ndarray, site_b: int, n_spins: int
) -> np.ndarray:
    out = np.ones((1, 1))
    for i in range(n_spins):
        if i == site_a:
            out = np.kron(out, op_a)
        elif i == site_b:
            out = np.kron(out, op_b)
        else:
            out = np.kron(out, np.eye(2))
    return out


def build_terms(spec: SpinChainSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Assemble (H0, H1, H2) as dense real-symmetric arrays.

    H0 and H2 are diagonal in the computational z-basis; H1 is the global
    transverse-field term the control multiplies.
    """
    n = spec.n_spins
    dim = spec.dim
    h0 = np.zeros((dim, dim))
    for i in range(n):
        j = (i + 1) % n
        h0 -= spec.couplings[i] * two_site_operator(_SZ, i, _SZ, j, n)
    h1 = np.zeros((dim, dim))
    for i in range(n):
        h1 -= site_operator(_SX, i, n)
    if spec.breaker is Breaker.SINGLE_SITE_Z:
        h2 = site_operator(_SZ, 0, n)
    else:
        h2 = np.zeros((dim, dim))
        for i in range(n):
            h2 += site_operator(_SZ, i, n)
    return h0, h1, h2


def static_hamiltonian(spec: SpinChainSpec) -> np.ndarray:
    """The pulse-off Hamiltonian H0 + beta * H2."""
    h0, _, h2 = build_terms(spec)
    return h0 + spec.beta * h2


def check_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOL) -> None:
    dev = np.max(np.abs(h - h.conj().T))
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian: max |H - H^dag| = {dev:.3e}")


def fix_eigenvector_signs(vectors: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Flip each column so its first component of magnitude > ``tol`` is positive.

    Makes eigenvectors reproducible across runs whenever the spectrum is
    nondegenerate at the working tolerance.
    """
    fixed = vectors.copy()
    for k in range(fixed.shape[1]):
        col = fixed[:, k]
        nz = np.nonzero(np.abs(col) > tol)[0]
        lead = nz[0] if nz.size else int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            fixed[:, k] = -col
    return fixed


def diagonalize(h: np.ndarray, tol: float = HERMITICITY_TOL) -> Spectrum:
    """Full eigendecomposition with ascending eigenvalues and fixed signs.

    Raises if the input is non-Hermitian beyond ``tol`` or if the residual
    ||H v - lambda v|| exceeds RESIDUAL_TOL * ||H||.
    """
    check_hermitian(h, tol)
    if np.iscomplexobj(h):
        if np.max(np.abs(h.imag)) > tol:
            raise ValueError("expected a real-symmetric matrix (this model has no complex terms)")
        h = h.real
    h_sym = 0.5 * (h + h.T)
    values, vectors = np.linalg.eigh(h_sym)
    vectors = fix_eigenvector_signs(vectors)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    residual = np.max(np.linalg.norm(h_sym @ vectors - vectors * values, axis=0))
    if residual > RESIDUAL_TOL * scale:
        raise ArithmeticError(
            f"eigendecomposition residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} * ||H||"
        )
    return Spectrum(eigenvalues=values, eigenvectors=vectors)


def gap_profile(spectrum: Spectrum) -> np.ndarray:
    """Adjacent level spacings E_{k+1} - E_k (length 2^N - 1, all >= 0)."""
    return np.diff(spectrum.eigenvalues)


def degeneracy_report(spec: SpinChainSpec, tol: float = DEGENERACY_TOL) -> DegeneracyReport:
    """Count near-degenerate adjacent pairs of H0 + beta*H2 and the smallest gap.

    ``pair_count`` is the number of adjacent sorted eigenvalues closer than
    ``tol``; ``min_gap`` is the raw smallest spacing (0 when an exact
    degeneracy survives the breaker).
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    spectrum = diagonalize(static_hamiltonian(spec))
    gaps = gap_profile(spectrum)
    return DegeneracyReport(pair_count=int(np.sum(gaps < tol)), min_gap=float(np.min(gaps)))


def build_boundary_states(spectrum: Spectrum, subs: SubspaceDefinition) -> BoundaryStates:
    """Equal-weight superpositions of the two eigenbands with their projectors.

    psi_i = c * sum_{k in initial} |phi_k>, psi_f likewise over the target
    band, with c = 1/sqrt(band size); for the canonical bands this equals
    (3/16 * 2^N + 1)^(-1/2).
    """
    dim = spectrum.dim
    sl_i, sl_f = subs.slices(dim)
    vecs_i = spectrum.eigenvectors[:, sl_i]
    vecs_f = spectrum.eigenvectors[:, sl_f]
    c = 1.0 / np.sqrt(vecs_i.shape[1])
    c_f = 1.0 / np.sqrt(vecs_f.shape[1])
    psi_i = (c * vecs_i.sum(axis=1)).astype(np.complex128)
    psi_f = (c_f * vecs_f.sum(axis=1)).astype(np.complex128)
    p_i = vecs_i @ vecs_i.T
    p_f = vecs_f @ vecs_f.T
    return BoundaryStates(psi_i=psi_i, psi_f=psi_f, p_i=p_i, p_f=p_f, normalization=c)
