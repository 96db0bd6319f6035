"""Spinor section over the light cone, Wigner phases and the Poincare action on states.

Conventions (fixed once, pinned by regression tests):

* contravariant vector ``u^a`` <-> hermitian ``U^{AA'} = (u^0 1 + u . sigma) / sqrt(2)``,
  so that ``u . v = eps_AB eps_A'B' U^{AA'} V^{BB'}`` with ``eps_01 = 1``;
* spinors are stored with upper indices; ``pi_A = pi^B eps_BA``;
* ``pi(k) = 2^(-1/4) (sqrt(k0+k3), (k1 + i k2) / sqrt(k0+k3))``,
  ``omega = (conj pi^1, -conj pi^0) / |pi|^2`` so that ``omega_A pi^A = 1``;
* ``m^a <-> omega^A conj(pi)^A'``, ``e_ab = eps_A'B' pi_A pi_B``;
* SL(2,C) acts on spinors by ``pi -> L pi`` and on vectors by ``U -> L U L^+``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import ensemble as ens
from . import oscillator as osc
from .exceptions import GridCompatibilityError, SingularRayError
from .grid import METRIC, MomentumGrid, check_polarized, minkowski
from .oscillator import OscillatorState

SIGMA = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex) / np.sqrt(2.0)

HELICITY = np.array([1.0, -1.0])  # indexed by PLUS, MINUS


def to_spinor_matrix(u) -> np.ndarray:
    return np.tensordot(np.asarray(u, dtype=complex), SIGMA, axes=(-1, 0))


def from_spinor_matrix(U) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    u0 = (U[..., 0, 0] + U[..., 1, 1]) * s
    u3 = (U[..., 0, 0] - U[..., 1, 1]) * s
    u1 = (U[..., 0, 1] + U[..., 1, 0]) * s
    u2 = 1j * (U[..., 0, 1] - U[..., 1, 0]) * s
    return np.stack([u0, u1, u2, u3], axis=-1)


def eps(x, y):
    """``eps_AB x^A y^B`` on upper-index spinors."""
    x = np.asarray(x)
    y = np.asarray(y)
    return x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]


def lower(spinor):
    """``pi_A = pi^B eps_BA``."""
    s = np.asarray(spinor)
    return np.stack([-s[..., 1], s[..., 0]], axis=-1)


# --------------------------------------------------------------------------
# spinor dyads and the null tetrad


@dataclass(frozen=True, eq=False)
class SpinorDyad:
    pi: np.ndarray
    omega: np.ndarray

    def pairing(self) -> complex:
        """``omega_A pi^A``."""
        return complex(eps(self.omega, self.pi))

    def null_vector(self) -> np.ndarray:
        return from_spinor_matrix(np.outer(self.pi, self.pi.conj())).real


def _singular(k, tol: float = 1e-12) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return k[..., 0] + k[..., 3] <= tol * np.abs(k[..., 0])


def standard_spinors(points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised section: ``(pi, omega)`` arrays of shape (..., 2)."""
    k = np.asarray(points, dtype=float)
    if np.any(_singular(k)):
        raise SingularRayError("momentum on the negative z-axis has no standard spinor")
    r = np.sqrt(k[..., 0] + k[..., 3])
    c = 2.0 ** -0.25
    pi = np.stack([c * r + 0j, c * (k[..., 1] + 1j * k[..., 2]) / r], axis=-1)
    n2 = np.sum(np.abs(pi) ** 2, axis=-1, keepdims=True)
    omega = np.stack([pi[..., 1].conj(), -pi[..., 0].conj()], axis=-1) / n2
    return pi, omega


def standard_spinor(k) -> SpinorDyad:
    k = np.asarray(k, dtype=float)
    if k.shape != (4,):
        raise ValueError("standard_spinor takes one 4-vector")
    pi, omega = standard_spinors(k)
    return SpinorDyad(pi, omega)


@dataclass(frozen=True, eq=False)
class PolarizationFrame:
    """``m^a``, ``conj(m)^a`` (contravariant) and ``e_ab`` (covariant, 4x4)."""

    m: np.ndarray
    mbar: np.ndarray
    e: np.ndarray


def _e_tensor(pi) -> np.ndarray:
    pl = lower(pi)
    # x^{A'} = pi_A U^{AA'} for each basis vector u = delta_a
    x = np.einsum("...A,aAB->...aB", pl, SIGMA)
    return eps(x[..., :, None, :], x[..., None, :, :])


def polarization_frame(dyad: SpinorDyad) -> PolarizationFrame:
    m = from_spinor_matrix(np.outer(dyad.omega, dyad.pi.conj()))
    mbar = from_spinor_matrix(np.outer(dyad.pi, dyad.omega.conj()))
    return PolarizationFrame(m, mbar, _e_tensor(dyad.pi))


def grid_frames(grid: MomentumGrid) -> PolarizationFrame:
    """Tetrad at every grid point: ``m``, ``mbar`` of shape (K, 4), ``e`` of shape (K, 4, 4)."""
    pi, omega = standard_spinors(grid.points)
    m = from_spinor_matrix(omega[:, :, None] * pi.conj()[:, None, :])
    mbar = from_spinor_matrix(pi[:, :, None] * omega.conj()[:, None, :])
    return PolarizationFrame(m, mbar, _e_tensor(pi))


def tetrad_residuals(grid: MomentumGrid) -> dict:
    """Worst violation of each null-tetrad relation over the grid."""
    fr = grid_frames(grid)
    k = grid.points
    pi, omega = standard_spinors(k)
    k_rec = from_spinor_matrix(pi[:, :, None] * pi.conj()[:, None, :])
    scale = np.maximum(1.0, k[:, 0])
    return {
        "reconstruction": float(np.max(np.abs(k_rec - k).max(axis=1) / scale)),
        "pairing": float(np.max(np.abs(eps(omega, pi) - 1.0))),
        "k.k": float(np.max(np.abs(minkowski(k, k)) / scale**2)),
        "k.m": float(np.max(np.abs(minkowski(k, fr.m)) / scale)),
        "m.m": float(np.max(np.abs(minkowski(fr.m, fr.m)))),
        "m.mbar": float(np.max(np.abs(minkowski(fr.m, fr.mbar) + 1.0))),
        "k^a e_ab": float(np.max(np.abs(np.einsum("ka,kab->kb", k, fr.e)).max(axis=1) / scale)),
    }


# --------------------------------------------------------------------------
# Poincare elements


def lorentz_vector(L, u) -> np.ndarray:
    """Vector action of ``L`` in SL(2,C): ``U -> L U L^+``."""
    L = np.asarray(L, dtype=complex)
    U = to_spinor_matrix(u)
    return from_spinor_matrix(L @ U @ L.conj().T).real


def lorentz_matrix(L) -> np.ndarray:
    return np.column_stack([lorentz_vector(L, e) for e in np.eye(4)])


@dataclass(frozen=True, eq=False)
class PoincareElement:
    Lambda: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    y: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        L = np.asarray(self.Lambda, dtype=complex)
        if L.shape != (2, 2) or abs(np.linalg.det(L) - 1.0) > 1e-12:
            raise ValueError("Lambda must be a 2x2 matrix with unit determinant")
        y = np.asarray(self.y, dtype=float)
        if y.shape != (4,):
            raise ValueError("translation must be a 4-vector")
        object.__setattr__(self, "Lambda", L)
        object.__setattr__(self, "y", y)

    def act(self, k) -> np.ndarray:
        """``Lambda k`` on an array of 4-vectors."""
        return lorentz_vector(self.Lambda, k)

    def act_inverse(self, k) -> np.ndarray:
        return lorentz_vector(np.linalg.inv(self.Lambda), k)

    def __matmul__(self, other: "PoincareElement") -> "PoincareElement":
        return PoincareElement(self.Lambda @ other.Lambda, self.y + lorentz_vector(self.Lambda, other.y))

    @property
    def is_translation(self) -> bool:
        return np.allclose(self.Lambda, np.eye(2), atol=0.0)


def rotation_z(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def boost_z(rapidity: float) -> np.ndarray:
    return np.diag([np.exp(0.5 * rapidity), np.exp(-0.5 * rapidity)]).astype(complex)


def random_sl2c(rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    M = scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) + np.eye(2)
    return M / np.sqrt(np.linalg.det(M))


def translation(y) -> PoincareElement:
    return PoincareElement(np.eye(2, dtype=complex), y)


def wigner_phase(Lambda, k) -> np.ndarray:
    """``Theta`` with ``Lambda pi(Lambda^-1 k) = exp(i Theta) pi(k)``; vectorised over k."""
    L = np.asarray(Lambda, dtype=complex)
    k = np.asarray(k, dtype=float)
    kp = lorentz_vector(np.linalg.inv(L), k)
    if np.any(_singular(kp)):
        raise SingularRayError("Lambda^-1 k lands on the negative z-axis")
    pi_p, _ = standard_spinors(kp)
    pi, _ = standard_spinors(k)
    v = np.einsum("AB,...B->...A", L, pi_p)
    lam = np.sum(v * pi.conj(), axis=-1) / np.sum(np.abs(pi) ** 2, axis=-1)
    return np.angle(lam)


def wigner_scalar(Lambda, k) -> np.ndarray:
    """The complex proportionality scalar itself (unit modulus up to rounding)."""
    L = np.asarray(Lambda, dtype=complex)
    k = np.asarray(k, dtype=float)
    pi_p, _ = standard_spinors(lorentz_vector(np.linalg.inv(L), k))
    pi, _ = standard_spinors(k)
    v = np.einsum("AB,...B->...A", L, pi_p)
    return np.sum(v * pi.conj(), axis=-1) / np.sum(np.abs(pi) ** 2, axis=-1)


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def grid_permutation(Lambda, grid: MomentumGrid, atol: float = 1e-9) -> np.ndarray:
    """``perm[i]`` = index of ``Lambda^-1 k_i``; raises if the grid is not mapped onto itself."""
    back = lorentz_vector(np.linalg.inv(np.asarray(Lambda, dtype=complex)), grid.points)
    perm = grid.find(back, atol=atol)
    if np.any(perm < 0) or len(set(perm.tolist())) != grid.size:
        raise GridCompatibilityError("Lambda does not permute the grid points")
    return perm


def is_grid_compatible(element: PoincareElement, grid: MomentumGrid) -> bool:
    try:
        grid_permutation(element.Lambda, grid)
    except GridCompatibilityError:
        return False
    return True


def compatible_rotations(grid: MomentumGrid) -> list[float]:
    """z-rotation angles mapping a :func:`build_grid` grid onto itself."""
    n = grid.spec.n_azimuth if grid.spec.directions is None else 1
    return [2.0 * np.pi * l / n for l in range(n)]


# --------------------------------------------------------------------------
# action on oscillator states


def _state_phases(element: PoincareElement, points, n_max: int, picture: str) -> np.ndarray:
    """Phase ``exp(2i(n+ - n-) Theta) exp(i k.y mult)`` at each point, shape (M, n+1, n+1)."""
    npl, nmi = osc.occupation(n_max)
    theta = wigner_phase(element.Lambda, points)
    ky = minkowski(points, element.y)
    mult = osc.momentum_multiplier(n_max, picture)
    return np.exp(2j * (npl - nmi)[None] * theta[:, None, None] + 1j * ky[:, None, None] * mult[None])


def transform_state(element: PoincareElement, state: OscillatorState, picture: str = "vacuum") -> OscillatorState:
    """Exact (grid-permutation) action ``psi(k, n) -> phase(k, n) psi(Lambda^-1 k, n)``."""
    perm = grid_permutation(element.Lambda, state.grid)
    ph = _state_phases(element, state.grid.points, state.n_max, picture)
    return OscillatorState(state.grid, ph * state.amps[perm])


def transform_functional(element: PoincareElement, evaluator, grid: MomentumGrid, n_max: int,
                         picture: str = "vacuum") -> tuple[OscillatorState, float]:
    """Resample a closed-form state after the transformation.

    ``evaluator(points)`` returns amplitudes of shape (M, n+1, n+1).  The
    measure is invariant, so no Jacobian enters; the returned number is the
    relative norm change, i.e. the quadrature error of the resampling.
    """
    before = OscillatorState(grid, evaluator(grid.points))
    back = element.act_inverse(grid.points)
    ph = _state_phases(element, grid.points, n_max, picture)
    after = OscillatorState(grid, ph * np.asarray(evaluator(back)))
    n0 = before.norm2()
    return after, abs(after.norm2() - n0) / n0


def transform_matrix(element: PoincareElement, grid: MomentumGrid, n_max: int,
                     picture: str = "vacuum") -> sp.csr_matrix:
    """Single-oscillator ``U`` as a sparse phased permutation on the flat index."""
    perm = grid_permutation(element.Lambda, grid)
    ph = _state_phases(element, grid.points, n_max, picture).reshape(grid.size, -1)
    d = (n_max + 1) ** 2
    rows = np.arange(grid.size * d)
    cols = (perm[:, None] * d + np.arange(d)[None, :]).reshape(-1)
    return sp.csr_matrix((ph.reshape(-1), (rows, cols)), shape=(grid.size * d,) * 2)


def transform_ensemble(element: PoincareElement, state: ens.EnsembleState, picture: str = "vacuum"):
    """``U (x) ... (x) U``."""
    if isinstance(state, ens.ProductState):
        return ens.ProductState(tuple(transform_state(element, f, picture) for f in state.factors))
    U = transform_matrix(element, state.grid, state.n_max, picture)
    amps = state.amps
    for n in range(state.N):
        amps = np.moveaxis(np.tensordot(U.toarray(), amps, axes=(1, n)), 0, n)
    return ens.DenseState(state.grid, state.n_max, amps)


def transport_amplitude(element: PoincareElement, f, grid: MomentumGrid) -> np.ndarray:
    """``f'(k, s) = f(Lambda k, s) exp(-2is Theta(Lambda, Lambda k)) exp(-i (Lambda k).y)``.

    With it ``U^+ a(f) U = a(f')`` for the smeared annihilation operator.
    """
    f = check_polarized(grid, f)
    perm = grid_permutation(element.Lambda, grid)
    fwd = np.empty_like(perm)
    fwd[perm] = np.arange(grid.size)  # k_{fwd[j]} = Lambda k_j
    kf = grid.points[fwd]
    theta = wigner_phase(element.Lambda, kf)
    phase = np.exp(-2j * HELICITY[None, :] * theta[:, None] - 1j * minkowski(kf, element.y)[:, None])
    return f[fwd] * phase


def transport_scalar(element: PoincareElement, g, grid: MomentumGrid) -> np.ndarray:
    """``g(Lambda k)`` on the grid."""
    perm = grid_permutation(element.Lambda, grid)
    fwd = np.empty_like(perm)
    fwd[perm] = np.arange(grid.size)
    return np.broadcast_to(np.asarray(g, dtype=complex), (grid.size,))[fwd]


def _restricted(M, idx):
    return M[idx][:, idx].toarray()


def covariance_check(element: PoincareElement, f, g, grid: MomentumGrid, n_max: int = 2, N: int = 2,
                     picture: str = "vacuum") -> float:
    """Max deviation of ``U^+ a(f) U`` from ``a(f')`` and of ``U^+ a(g)^+ U`` from ``a(g')^+``.

    Matrix elements are taken between safe-subspace basis states of the
    N-oscillator ensemble.
    """
    Ul = transform_matrix(element, grid, n_max, picture)
    U = Ul
    for _ in range(N - 1):
        U = sp.kron(U, Ul).tocsr()
    Ud = U.conj().T.tocsr()
    idx = ens.safe_indices(grid, n_max, N)
    res = 0.0
    for op, h in ((ens.annihilation, f), (ens.creation, g)):
        lhs = Ud @ ens.collective_matrix(op(h), grid, n_max, N) @ U
        rhs = ens.collective_matrix(op(transport_amplitude(element, h, grid)), grid, n_max, N)
        res = max(res, float(np.abs(_restricted(lhs, idx) - _restricted(rhs, idx)).max()))
    return res


def identity_covariance_check(element: PoincareElement, g, grid: MomentumGrid, n_max: int = 2, N: int = 2,
                              picture: str = "vacuum") -> float:
    """Max deviation of ``U^+ I(g) U`` from ``I(g o Lambda)``."""
    Ul = transform_matrix(element, grid, n_max, picture)
    U = Ul
    for _ in range(N - 1):
        U = sp.kron(U, Ul).tocsr()
    lhs = U.conj().T @ ens.collective_matrix(ens.identity_weight(g), grid, n_max, N) @ U
    rhs = ens.collective_matrix(ens.identity_weight(transport_scalar(element, g, grid)), grid, n_max, N)
    return float(abs(lhs - rhs).max())


def lower_index(u) -> np.ndarray:
    return np.asarray(u) @ METRIC

