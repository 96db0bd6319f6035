"""N-oscillator ensembles and collective operators.

Collective normalizations: ``1/sqrt(N)`` for the ladder operators,
``1/N`` for ``I(g)``, plain sums for the four-momentum and number operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import prod
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import oscillator as osc
from .exceptions import DimensionCapError, ShapeError, TruncationError
from .grid import MomentumGrid, VacuumProfile, check_polarized
from .oscillator import OscillatorState

DENSE_CAP = 2_000_000


def _local_weights(grid: MomentumGrid, n_max: int) -> np.ndarray:
    return np.repeat(grid.weights, (n_max + 1) ** 2)


def _check_cap(dim: int, cap: int) -> None:
    if dim > cap:
        raise DimensionCapError(f"dense ensemble dimension {dim} exceeds cap {cap}")


@dataclass(frozen=True, eq=False)
class ProductState:
    """``|psi_1> (x) ... (x) |psi_N>``."""

    factors: tuple

    def __post_init__(self):
        fs = tuple(self.factors)
        if not fs:
            raise ShapeError("a product state needs at least one factor")
        for f in fs[1:]:
            osc._same_space(fs[0], f)
        object.__setattr__(self, "factors", fs)

    @property
    def N(self) -> int:
        return len(self.factors)

    @property
    def grid(self) -> MomentumGrid:
        return self.factors[0].grid

    @property
    def n_max(self) -> int:
        return self.factors[0].n_max

    @property
    def dense_dim(self) -> int:
        return self.factors[0].dim ** self.N

    def norm2(self) -> float:
        return prod(f.norm2() for f in self.factors)

    def inner(self, other: "EnsembleState") -> complex:
        if isinstance(other, ProductState):
            if other.N != self.N:
                raise ShapeError("ensembles of different size")
            return prod(a.inner(b) for a, b in zip(self.factors, other.factors))
        return to_dense(self).inner(other)


@dataclass(frozen=True, eq=False)
class DenseState:
    """Full tensor of amplitudes, one axis of length ``K (n_max+1)^2`` per oscillator."""

    grid: MomentumGrid
    n_max: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        d = osc.local_dim(self.grid, self.n_max)
        if a.ndim < 1 or any(s != d for s in a.shape):
            raise ShapeError(f"dense amplitudes must have every axis of length {d}, got {a.shape}")
        object.__setattr__(self, "amps", a)

    @property
    def N(self) -> int:
        return self.amps.ndim

    @property
    def dense_dim(self) -> int:
        return self.amps.size

    def _weighted(self, x: np.ndarray) -> complex:
        W = _local_weights(self.grid, self.n_max)
        for _ in range(self.N):
            x = np.tensordot(x, W, axes=(0, 0))
        return complex(x)

    def norm2(self) -> float:
        return float(self._weighted(np.abs(self.amps) ** 2).real)

    def inner(self, other: "EnsembleState") -> complex:
        other = to_dense(other)
        if other.amps.shape != self.amps.shape:
            raise ShapeError("dense states of different shape")
        return self._weighted(self.amps.conj() * other.amps)

    def __add__(self, other):
        return DenseState(self.grid, self.n_max, self.amps + to_dense(other).amps)

    def __sub__(self, other):
        return DenseState(self.grid, self.n_max, self.amps - to_dense(other).amps)

    def __mul__(self, c):
        return DenseState(self.grid, self.n_max, self.amps * c)

    __rmul__ = __mul__


EnsembleState = Union[ProductState, DenseState]


def to_dense(state: EnsembleState, cap: int = DENSE_CAP) -> DenseState:
    """Explicit densification of a product state."""
    if isinstance(state, DenseState):
        return state
    _check_cap(state.dense_dim, cap)
    amps = reduce(np.multiply.outer, [f.flat() for f in state.factors])
    return DenseState(state.grid, state.n_max, np.asarray(amps))


def dense_from_factors(factors: Sequence[OscillatorState], cap: int = DENSE_CAP) -> DenseState:
    return to_dense(ProductState(tuple(factors)), cap)


def ensemble_vacuum(profile: VacuumProfile, N: int, n_max: int = 1) -> ProductState:
    if N < 1:
        raise ValueError("N must be >= 1")
    v = osc.vacuum_state(profile, n_max)
    return ProductState((v,) * N)


def ensemble_coherent(profile: VacuumProfile, alpha, N: int, n_max: int, tail_tol: float = 1e-10) -> ProductState:
    """``|O_alpha>`` of the ensemble: N copies of the single coherent state with ``alpha/sqrt(N)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    alpha = check_polarized(profile.grid, alpha)
    c = osc.coherent_state(profile, alpha / np.sqrt(N), n_max, tail_tol=tail_tol / N)
    return ProductState((c,) * N)


# --------------------------------------------------------------------------
# collective operators


_KINDS = ("annihilation", "creation", "I", "four_momentum", "number")


@dataclass(frozen=True, eq=False)
class CollectiveOp:
    """One of the collective operators together with its parameters.

    ``param`` is the smearing function for the ladder operators, the grid
    scalar for ``I``, the 4-vector ``x`` for ``four_momentum`` (meaning
    ``x . P``) and unused for ``number``.
    """

    kind: str
    param: object = None
    picture: str = "vacuum"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown collective operator {self.kind!r}")

    def scale(self, N: int) -> float:
        if self.kind in ("annihilation", "creation"):
            return 1.0 / np.sqrt(N)
        if self.kind == "I":
            return 1.0 / N
        return 1.0

    def local_matrix(self, grid: MomentumGrid, n_max: int) -> np.ndarray:
        if self.kind == "annihilation":
            return osc.annihilation_matrix(self.param, grid, n_max)
        if self.kind == "creation":
            return osc.creation_matrix(self.param, grid, n_max)
        if self.kind == "I":
            return osc.Ik_matrix(self.param, grid, n_max)
        if self.kind == "four_momentum":
            return osc.four_momentum_matrix(self.param, grid, n_max, self.picture)
        return osc.number_matrix(grid, n_max)


def annihilation(f) -> CollectiveOp:
    return CollectiveOp("annihilation", f)


def creation(f) -> CollectiveOp:
    return CollectiveOp("creation", f)


def identity_weight(g) -> CollectiveOp:
    return CollectiveOp("I", g)


def four_momentum(x, picture: str = "vacuum") -> CollectiveOp:
    return CollectiveOp("four_momentum", np.asarray(x, dtype=float), picture)


def number() -> CollectiveOp:
    return CollectiveOp("number")


def apply_local(M: np.ndarray, amps: np.ndarray, axis: int) -> np.ndarray:
    """Apply a single-oscillator matrix to one tensor axis."""
    return np.moveaxis(np.tensordot(M, amps, axes=(1, axis)), 0, axis)


def apply_collective(op: CollectiveOp, state: EnsembleState, cap: int = DENSE_CAP) -> DenseState:
    """Collective operator applied to ``state``; product inputs become a dense sum of N products."""
    dense = to_dense(state, cap)
    M = op.local_matrix(dense.grid, dense.n_max)
    out = np.zeros_like(dense.amps)
    for n in range(dense.N):
        out += apply_local(M, dense.amps, n)
    return DenseState(dense.grid, dense.n_max, op.scale(dense.N) * out)


def collective_matrix(op: CollectiveOp, grid: MomentumGrid, n_max: int, N: int) -> sp.csr_matrix:
    """Sparse matrix of a collective operator on the full N-oscillator tensor space."""
    M = sp.csr_matrix(op.local_matrix(grid, n_max))
    d = M.shape[0]
    total = sp.csr_matrix((d**N, d**N), dtype=complex)
    for n in range(N):
        term = sp.kron(sp.kron(sp.identity(d**n), M), sp.identity(d ** (N - n - 1)))
        total = total + term
    return (op.scale(N) * total).tocsr()


def safe_indices(grid: MomentumGrid, n_max: int, N: int, level: Optional[int] = None) -> np.ndarray:
    """Flat indices of basis states with every occupation ``<= level`` (default ``n_max - 1``)."""
    level = n_max - 1 if level is None else level
    npl, nmi = osc.occupation(n_max)
    ok_local = np.tile(((npl <= level) & (nmi <= level)).reshape(-1), grid.size)
    ok = reduce(np.multiply.outer, [ok_local] * N)
    return np.flatnonzero(np.asarray(ok).reshape(-1))


def local_weight_vector(grid: MomentumGrid, n_max: int, N: int) -> np.ndarray:
    W = _local_weights(grid, n_max)
    return np.asarray(reduce(np.multiply.outer, [W] * N)).reshape(-1)


def ccr_residual(f, g, grid: MomentumGrid, n_max: int, N: int) -> float:
    """Max matrix-element deviation of ``[a(f), a(g)^+]`` from ``I(sum_s conj(f) g)`` on the safe subspace."""
    f = check_polarized(grid, f)
    g = check_polarized(grid, g)
    A = collective_matrix(annihilation(f), grid, n_max, N)
    C = collective_matrix(creation(g), grid, n_max, N)
    I = collective_matrix(identity_weight(np.sum(f.conj() * g, axis=1)), grid, n_max, N)
    idx = safe_indices(grid, n_max, N)
    diff = (A @ C - C @ A - I)[idx][:, idx]
    return float(abs(diff).max()) if diff.nnz else 0.0


def centrality_residual(h, f, grid: MomentumGrid, n_max: int, N: int) -> float:
    """Max matrix element of ``[I(h), a(f)]`` and ``[I(h), a(f)^+]`` on the safe subspace."""
    f = check_polarized(grid, f)
    I = collective_matrix(identity_weight(h), grid, n_max, N)
    idx = safe_indices(grid, n_max, N)
    res = 0.0
    for op in (annihilation(f), creation(f)):
        M = collective_matrix(op, grid, n_max, N)
        diff = (I @ M - M @ I)[idx][:, idx]
        if diff.nnz:
            res = max(res, float(abs(diff).max()))
    return res


# --------------------------------------------------------------------------
# multiphoton correlators by brute force


def multiphoton_product_bruteforce(fs: Sequence, gs: Sequence, profile: VacuumProfile, N: int,
                                   n_max: Optional[int] = None, cap: int = DENSE_CAP) -> complex:
    """``<O| a(f_1)..a(f_m) a(g_1)^+..a(g_m')^+ |O>`` from dense vectors.

    Exact in floating point as long as ``n_max >= max(m, m')``, which keeps
    every creation below the truncation.
    """
    m, mp = len(fs), len(gs)
    need = max(m, mp, 1)
    if n_max is None:
        n_max = need
    if n_max < max(m, mp):
        raise TruncationError(f"n_max={n_max} cannot hold {max(m, mp)} excitations on one mode")
    grid = profile.grid
    _check_cap(osc.local_dim(grid, n_max) ** N, cap)
    vac = to_dense(ensemble_vacuum(profile, N, n_max), cap)

    def build(funcs):
        st = vac
        for f in funcs:
            st = apply_collective(creation(check_polarized(grid, f)), st, cap)
        return st

    return build(fs).inner(build(gs))


# --------------------------------------------------------------------------
# displacements


def displacement_generator(beta, grid: MomentumGrid, n_max: int, N: int) -> sp.csr_matrix:
    """Sparse ``a(beta)^+ - a(beta)`` on the dense N-oscillator space."""
    return (collective_matrix(creation(beta), grid, n_max, N)
            - collective_matrix(annihilation(beta), grid, n_max, N)).tocsr()


def displacement_apply(beta, state: EnsembleState, method: str = "auto",
                       tail_tol: float = 1e-10, cap: int = DENSE_CAP) -> EnsembleState:
    """``D(beta) = exp(a(beta)^+ - a(beta))`` applied to an ensemble state.

    The product path uses ``D(beta) = D_1(beta/sqrt N) (x) ... (x) D_1(beta/sqrt N)``
    with exact single-mode matrix elements.  The dense path exponentiates the
    truncated generator (scaling and squaring inside ``expm_multiply``).
    """
    if method == "auto":
        method = "product" if isinstance(state, ProductState) else "dense"
    if method == "product":
        if not isinstance(state, ProductState):
            raise ValueError("product path needs a ProductState")
        b = check_polarized(state.grid, beta) / np.sqrt(state.N)
        out = tuple(osc.apply_displacement(b, f) for f in state.factors)
        leak = state.norm2() - prod(f.norm2() for f in out)
        if leak > tail_tol:
            raise TruncationError(f"displacement pushed mass {leak:.3e} above n_max={state.n_max}")
        return ProductState(out)
    if method == "dense":
        dense = to_dense(state, cap)
        G = displacement_generator(check_polarized(dense.grid, beta), dense.grid, dense.n_max, dense.N)
        v = expm_multiply(G, dense.amps.reshape(-1))
        return DenseState(dense.grid, dense.n_max, v.reshape(dense.amps.shape))
    raise ValueError(f"unknown displacement method {method!r}")


def displacement_matrix(beta, grid: MomentumGrid, n_max: int, N: int) -> np.ndarray:
    """Dense matrix of the truncated-generator exponential (for identity checks at tiny sizes)."""
    from scipy.linalg import expm

    G = displacement_generator(check_polarized(grid, beta), grid, n_max, N).toarray()
    return expm(G)


def displacement_conjugation_residual(beta, f, grid: MomentumGrid, n_max: int, N: int = 2,
                                     level: Optional[int] = None) -> float:
    """Max deviation of ``D^+ a(f) D`` from ``a(f) + I(sum_s conj(f) beta)`` between basis states
    with occupations ``<= level``.

    ``D`` is the exponential of the truncated generator, so ``level`` must sit
    well below ``n_max`` for the truncation error to be negligible; the
    default is ``n_max // 4``.
    """
    beta = check_polarized(grid, beta)
    f = check_polarized(grid, f)
    level = n_max // 4 if level is None else level
    idx = safe_indices(grid, n_max, N, level)
    dim = osc.local_dim(grid, n_max) ** N
    cols = np.zeros((dim, len(idx)), dtype=complex)
    cols[idx, np.arange(len(idx))] = 1.0
    DE = expm_multiply(displacement_generator(beta, grid, n_max, N).tocsc(), cols)
    A = collective_matrix(annihilation(f), grid, n_max, N)
    I = collective_matrix(identity_weight(np.sum(f.conj() * beta, axis=1)), grid, n_max, N)
    diff = DE.conj().T @ (A @ DE) - (A + I)[idx][:, idx].toarray()
    return float(np.abs(diff).max())


# --------------------------------------------------------------------------
# excitation statistics


def single_distribution(state: OscillatorState) -> np.ndarray:
    """Probability of total occupation ``n_+ + n_-`` for one oscillator."""
    npl, nmi = osc.occupation(state.n_max)
    probs = np.tensordot(state.grid.weights, np.abs(state.amps) ** 2, axes=(0, 0))
    return np.bincount((npl + nmi).reshape(-1), weights=probs.reshape(-1), minlength=2 * state.n_max + 1)


def excitation_distribution(state: EnsembleState, tail_tol: Optional[float] = None) -> np.ndarray:
    """Distribution of the total excitation number of the ensemble.

    With ``tail_tol`` set, raises TruncationError if the probabilities miss
    more than ``tail_tol`` of unit mass.
    """
    if isinstance(state, ProductState):
        cache = {}
        p = np.array([1.0])
        for f in state.factors:
            q = cache.get(id(f))
            if q is None:
                q = cache[id(f)] = single_distribution(f)
            p = np.convolve(p, q)
    else:
        npl, nmi = osc.occupation(state.n_max)
        local_n = np.tile((npl + nmi).reshape(-1), state.grid.size)
        total = reduce(np.add.outer, [local_n] * state.N).reshape(-1)
        W = local_weight_vector(state.grid, state.n_max, state.N)
        p = np.bincount(total, weights=W * np.abs(state.amps.reshape(-1)) ** 2)
    if tail_tol is not None and abs(1.0 - p.sum()) > tail_tol:
        raise TruncationError(f"excitation distribution misses mass {1.0 - p.sum():.3e}")
    return p


def poisson_tv(p: np.ndarray, lam: float) -> float:
    """Total-variation distance between ``p`` (on 0..len-1) and Poisson(lam)."""
    from scipy.stats import poisson

    n = np.arange(len(p))
    q = poisson.pmf(n, lam)
    return float(0.5 * (np.abs(p - q).sum() + poisson.sf(len(p) - 1, lam)))
