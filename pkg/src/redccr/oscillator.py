"""Single indefinite-frequency oscillator: truncated two-helicity Fock space over a grid.

A state is a coefficient array ``psi[i, n_plus, n_minus]`` with norm
``sum_i w_i sum_n |psi|^2``.  Every operator here is diagonal in the grid
index, which is why the same local matrices serve for amplitudes and for
measure-weighted inner products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln
from scipy.stats import poisson

from .exceptions import ShapeError, TruncationError
from .grid import MINUS, PLUS, MomentumGrid, VacuumProfile, check_polarized, minkowski

PICTURES = ("physical", "vacuum")


@dataclass(frozen=True, eq=False)
class OscillatorState:
    grid: MomentumGrid
    amps: np.ndarray

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex)
        if a.ndim != 3 or a.shape[0] != self.grid.size or a.shape[1] != a.shape[2] or a.shape[1] < 2:
            raise ShapeError(f"state amplitudes must have shape (K, n+1, n+1) with n >= 1, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ShapeError("state amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @property
    def n_max(self) -> int:
        return self.amps.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm2(self) -> float:
        return float(np.dot(self.grid.weights, np.sum(np.abs(self.amps) ** 2, axis=(1, 2))))

    def inner(self, other: "OscillatorState") -> complex:
        """Measure-weighted ``<self|other>``."""
        _same_space(self, other)
        return complex(np.dot(self.grid.weights, np.sum(self.amps.conj() * other.amps, axis=(1, 2))))

    def flat(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def _new(self, amps) -> "OscillatorState":
        return OscillatorState(self.grid, amps)

    def __add__(self, other):
        _same_space(self, other)
        return self._new(self.amps + other.amps)

    def __sub__(self, other):
        _same_space(self, other)
        return self._new(self.amps - other.amps)

    def __mul__(self, c):
        return self._new(self.amps * c)

    __rmul__ = __mul__


def _same_space(a: OscillatorState, b: OscillatorState) -> None:
    if a.grid is not b.grid and (a.grid.size != b.grid.size or not np.array_equal(a.grid.weights, b.grid.weights)):
        raise ShapeError("states live on different grids")
    if a.amps.shape != b.amps.shape:
        raise ShapeError("states have different truncations")


def check_truncation(n_max: int) -> int:
    if int(n_max) != n_max or n_max < 1:
        raise TruncationError(f"n_max must be an integer >= 1, got {n_max!r}")
    return int(n_max)


def local_dim(grid: MomentumGrid, n_max: int) -> int:
    return grid.size * (n_max + 1) ** 2


def zero_state(grid: MomentumGrid, n_max: int) -> OscillatorState:
    n_max = check_truncation(n_max)
    return OscillatorState(grid, np.zeros((grid.size, n_max + 1, n_max + 1), dtype=complex))


def basis_state(grid: MomentumGrid, n_max: int, i: int, n_plus: int, n_minus: int) -> OscillatorState:
    """Coefficient function equal to one at ``(k_i, n_plus, n_minus)``, zero elsewhere."""
    a = np.zeros((grid.size, n_max + 1, n_max + 1), dtype=complex)
    a[i, n_plus, n_minus] = 1.0
    return OscillatorState(grid, a)


def random_state(grid: MomentumGrid, n_max: int, rng: np.random.Generator, safe: bool = False) -> OscillatorState:
    """Gaussian random state; ``safe`` restricts support to ``n_+, n_- <= n_max - 1``."""
    shape = (grid.size, n_max + 1, n_max + 1)
    a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    if safe:
        a[:, n_max, :] = 0.0
        a[:, :, n_max] = 0.0
    return OscillatorState(grid, a)


def occupation(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``(n_plus, n_minus)`` index grids of shape (n+1, n+1)."""
    n = np.arange(n_max + 1)
    return np.meshgrid(n, n, indexing="ij")


def vacuum_state(profile: VacuumProfile, n_max: int = 1) -> OscillatorState:
    profile.require_normalized()
    state = zero_state(profile.grid, n_max)
    a = np.array(state.amps)
    a[:, 0, 0] = profile.amplitudes
    return OscillatorState(profile.grid, a)


# --------------------------------------------------------------------------
# ladder operators on amplitude arrays


def _lower(a: np.ndarray, axis: int) -> np.ndarray:
    """Truncated ``a_s``: out[.., n, ..] = sqrt(n+1) a[.., n+1, ..]."""
    out = np.zeros_like(a)
    n_max = a.shape[axis] - 1
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, n_max)
    shape = [1] * a.ndim
    shape[axis] = n_max
    out[tuple(dst)] = np.sqrt(np.arange(1, n_max + 1)).reshape(shape) * a[tuple(src)]
    return out


def _raise(a: np.ndarray, axis: int) -> np.ndarray:
    """Truncated ``a_s^dagger``; amplitude pushed above n_max is dropped."""
    out = np.zeros_like(a)
    n_max = a.shape[axis] - 1
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[axis] = slice(0, n_max)
    dst[axis] = slice(1, None)
    shape = [1] * a.ndim
    shape[axis] = n_max
    out[tuple(dst)] = np.sqrt(np.arange(1, n_max + 1)).reshape(shape) * a[tuple(src)]
    return out


def apply_annihilation(f, state: OscillatorState) -> OscillatorState:
    """Smeared ``a(f) = sum_s int dGamma conj(f(k,s)) a(k,s)``."""
    f = check_polarized(state.grid, f)
    a = state.amps
    out = f[:, PLUS, None, None].conj() * _lower(a, 1) + f[:, MINUS, None, None].conj() * _lower(a, 2)
    return state._new(out)


def apply_creation(f, state: OscillatorState) -> OscillatorState:
    f = check_polarized(state.grid, f)
    a = state.amps
    out = f[:, PLUS, None, None] * _raise(a, 1) + f[:, MINUS, None, None] * _raise(a, 2)
    return state._new(out)


def _scalar_on_grid(grid: MomentumGrid, g) -> np.ndarray:
    g = np.broadcast_to(np.asarray(g, dtype=complex), (grid.size,))
    return g


def apply_Ik(g, state: OscillatorState) -> OscillatorState:
    """Smeared ``I(g) = int dGamma g(k) I_k``: multiplication by ``g_i``."""
    g = np.asarray(g, dtype=complex)
    if g.ndim > 0 and g.shape != (state.grid.size,):
        raise ShapeError(f"I(g) needs one value per grid point, got shape {g.shape}")
    g = _scalar_on_grid(state.grid, g)
    return state._new(g[:, None, None] * state.amps)


def _check_picture(picture: str) -> str:
    if picture not in PICTURES:
        raise ValueError(f"picture must be one of {PICTURES}, got {picture!r}")
    return picture


def momentum_multiplier(n_max: int, picture: str) -> np.ndarray:
    """Occupation factor of ``P``: ``n_+ + n_- + 1`` (physical) or ``n_+ + n_-`` (vacuum)."""
    npl, nmi = occupation(n_max)
    return (npl + nmi + (1 if _check_picture(picture) == "physical" else 0)).astype(float)


def apply_four_momentum(x, state: OscillatorState, picture: str = "vacuum") -> OscillatorState:
    """``(x . P) psi``: multiplies by ``(k_i . x)`` times the occupation factor."""
    kx = minkowski(state.grid.points, np.asarray(x, dtype=float))
    return state._new(kx[:, None, None] * momentum_multiplier(state.n_max, picture)[None] * state.amps)


def translate(y, state: OscillatorState, picture: str = "vacuum") -> OscillatorState:
    """``exp(i y . P) psi``, the translation by ``y``."""
    ky = minkowski(state.grid.points, np.asarray(y, dtype=float))
    phase = np.exp(1j * ky[:, None, None] * momentum_multiplier(state.n_max, picture)[None])
    return state._new(phase * state.amps)


def apply_number(state: OscillatorState) -> OscillatorState:
    npl, nmi = occupation(state.n_max)
    return state._new((npl + nmi)[None] * state.amps)


# --------------------------------------------------------------------------
# coherent states


def coherent_tail(alpha, profile: VacuumProfile, n_max: int) -> float:
    """Z-weighted probability mass of an exact coherent state lying above the truncation."""
    alpha = check_polarized(profile.grid, alpha)
    sf = poisson.sf(n_max, np.abs(alpha) ** 2)
    per_point = sf[:, 0] + sf[:, 1] - sf[:, 0] * sf[:, 1]
    return float(np.dot(profile.grid.weights * profile.Z, per_point))


def coherent_state(profile: VacuumProfile, alpha, n_max: int, tail_tol: float = 1e-10) -> OscillatorState:
    """Truncated ``|O_alpha>``.

    Raises TruncationError when the dropped tail mass exceeds ``tail_tol``.
    """
    profile.require_normalized()
    n_max = check_truncation(n_max)
    alpha = check_polarized(profile.grid, alpha)
    tail = coherent_tail(alpha, profile, n_max)
    if tail > tail_tol:
        raise TruncationError(f"coherent tail mass {tail:.3e} above n_max={n_max} exceeds {tail_tol:.1e}")
    n = np.arange(n_max + 1)
    inv_sqrt_fact = np.exp(-0.5 * gammaln(n + 1))
    # alpha**0 == 1 also for alpha == 0
    ap = alpha[:, PLUS, None] ** n[None, :] * inv_sqrt_fact
    am = alpha[:, MINUS, None] ** n[None, :] * inv_sqrt_fact
    env = profile.amplitudes * np.exp(-0.5 * np.sum(np.abs(alpha) ** 2, axis=1))
    return OscillatorState(profile.grid, env[:, None, None] * ap[:, :, None] * am[:, None, :])


def coherent_overlap(profile: VacuumProfile, alpha, beta) -> complex:
    """Closed form of ``<O_alpha|O_beta>`` for untruncated coherent states."""
    alpha = check_polarized(profile.grid, alpha)
    beta = check_polarized(profile.grid, beta)
    expo = np.sum(-0.5 * np.abs(alpha) ** 2 - 0.5 * np.abs(beta) ** 2 + alpha.conj() * beta, axis=1)
    return complex(np.dot(profile.grid.weights * profile.Z, np.exp(expo)))


# --------------------------------------------------------------------------
# local operator matrices on the flattened (point, n_plus, n_minus) index


def ladder_matrix(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


def mode_matrices(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``a_+`` and ``a_-`` on the (n+1)^2-dimensional two-mode space."""
    a = ladder_matrix(n_max)
    eye = np.eye(n_max + 1)
    return np.kron(a, eye), np.kron(eye, a)


def _block_diag(blocks: np.ndarray) -> np.ndarray:
    K, d, _ = blocks.shape
    out = np.zeros((K * d, K * d), dtype=complex)
    for i in range(K):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = blocks[i]
    return out


def annihilation_matrix(f, grid: MomentumGrid, n_max: int) -> np.ndarray:
    f = check_polarized(grid, f)
    ap, am = mode_matrices(n_max)
    blocks = f[:, PLUS, None, None].conj() * ap[None] + f[:, MINUS, None, None].conj() * am[None]
    return _block_diag(blocks)


def creation_matrix(f, grid: MomentumGrid, n_max: int) -> np.ndarray:
    return annihilation_matrix(f, grid, n_max).conj().T


def Ik_matrix(g, grid: MomentumGrid, n_max: int) -> np.ndarray:
    g = _scalar_on_grid(grid, g)
    return np.diag(np.repeat(g, (n_max + 1) ** 2))


def four_momentum_matrix(x, grid: MomentumGrid, n_max: int, picture: str = "vacuum") -> np.ndarray:
    kx = minkowski(grid.points, np.asarray(x, dtype=float))
    mult = momentum_multiplier(n_max, picture).reshape(-1)
    return np.diag((kx[:, None] * mult[None, :]).reshape(-1)).astype(complex)


def number_matrix(grid: MomentumGrid, n_max: int) -> np.ndarray:
    npl, nmi = occupation(n_max)
    return np.diag(np.tile((npl + nmi).reshape(-1), grid.size)).astype(complex)


def mode_displacement(beta: complex, n_max: int) -> np.ndarray:
    """Untruncated single-mode ``<m|D(beta)|n>`` for ``m, n <= n_max`` (Laguerre form)."""
    x = abs(beta) ** 2
    out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for m in range(n_max + 1):
        for n in range(n_max + 1):
            lo, hi = min(m, n), max(m, n)
            amp = beta if m >= n else -np.conj(beta)
            mag = np.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) - 0.5 * x)
            out[m, n] = mag * amp ** (hi - lo) * eval_genlaguerre(lo, hi - lo, x)
    return out


def displacement_blocks(beta, grid: MomentumGrid, n_max: int) -> np.ndarray:
    """Per-point ``D(beta_+) (x) D(beta_-)`` blocks, shape (K, (n+1)^2, (n+1)^2)."""
    beta = check_polarized(grid, beta)
    return np.stack([
        np.kron(mode_displacement(b[PLUS], n_max), mode_displacement(b[MINUS], n_max)) for b in beta
    ])


def apply_displacement(beta, state: OscillatorState) -> OscillatorState:
    """``exp(a(beta)^dagger - a(beta))`` from exact matrix elements, restricted to the truncation box."""
    blocks = displacement_blocks(beta, state.grid, state.n_max)
    d = (state.n_max + 1) ** 2
    out = np.einsum("kab,kb->ka", blocks, state.amps.reshape(state.grid.size, d))
    return state._new(out.reshape(state.amps.shape))
