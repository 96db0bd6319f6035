"""Light-cone momentum grids, vacuum profiles and the Z-weighted inner product.

The invariant measure is ``dGamma(k) = d^3k / ((2 pi)^3 2|k|)``.  Each grid
point carries the exact measure of its cell, so sums ``sum_i w_i g(k_i)`` are
midpoint-type quadratures of ``int dGamma g``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import GridSpecError, ProfileError, ShapeError

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

# helicity axis layout of every polarized amplitude array
PLUS, MINUS = 0, 1


def minkowski(a, b):
    """Bilinear Minkowski product over the last axis, signature (+,-,-,-)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Construction parameters for :func:`build_grid`.

    ``radii`` and ``directions`` replace the log-radial and equal-area node
    sets; they are meant for small hand-built fixtures and then require an
    explicit ``weight`` (a scalar or one value per point).
    """

    k_min: float = 0.1
    k_max: float = 10.0
    n_radial: int = 8
    n_polar: int = 2
    n_azimuth: int = 4
    radii: Optional[Sequence[float]] = None
    directions: Optional[Sequence[Sequence[float]]] = None
    weight: Optional[object] = None

    @property
    def n_angular(self) -> int:
        if self.directions is not None:
            return len(self.directions)
        return self.n_polar * self.n_azimuth


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    points: np.ndarray
    weights: np.ndarray
    spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ShapeError(f"points must have shape (K, 4), got {pts.shape}")
        if w.shape != (pts.shape[0],):
            raise ShapeError("one weight per point required")
        if not np.all(w > 0):
            raise GridSpecError("grid weights must be strictly positive")
        if not np.all(pts[:, 0] > 0):
            raise GridSpecError("grid points must have positive energy")
        on_axis = (pts[:, 1] == 0) & (pts[:, 2] == 0) & (pts[:, 3] < 0)
        if np.any(on_axis):
            raise GridSpecError("grid contains points on the negative z-axis")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def from_momenta(cls, momenta, weights, spec: Optional[GridSpec] = None) -> "MomentumGrid":
        """Grid from 3-momenta; energies are set to ``|k|`` so every point is exactly null."""
        p = np.atleast_2d(np.asarray(momenta, dtype=float))
        k0 = np.linalg.norm(p, axis=1)
        w = np.broadcast_to(np.asarray(weights, dtype=float), k0.shape)
        return cls(np.column_stack([k0, p]), w, spec if spec is not None else GridSpec())

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.size

    @property
    def momenta(self) -> np.ndarray:
        return self.points[:, 1:]

    @property
    def energies(self) -> np.ndarray:
        return self.points[:, 0]

    def total_measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values) -> complex:
        """Quadrature ``sum_i w_i v_i`` over the leading axis."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))

    def find(self, points, atol: float = 1e-9) -> np.ndarray:
        """Indices of grid points matching ``points`` (shape (M, 4)); -1 where absent."""
        q = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.abs(q[:, None, :] - self.points[None, :, :]).max(axis=2)
        idx = d.argmin(axis=1)
        scale = max(1.0, float(np.abs(self.points).max()))
        idx[d[np.arange(len(q)), idx] > atol * scale] = -1
        return idx


def _equal_area_directions(n_polar: int, n_azimuth: int) -> np.ndarray:
    # band midpoints in cos(theta) never reach +-1, so no node sits on the z-axis
    cos_t = -1.0 + (2.0 * np.arange(n_polar) + 1.0) / n_polar
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    ct, ph = np.meshgrid(cos_t, phi, indexing="ij")
    st = np.sqrt(1.0 - ct**2)
    return np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)


def shell_measure(r_lo, r_hi, solid_angle=4.0 * np.pi):
    """Exact ``int dGamma`` over a spherical shell sector."""
    return (np.asarray(r_hi) ** 2 - np.asarray(r_lo) ** 2) / 2.0 * solid_angle / (2.0 * (2.0 * np.pi) ** 3)


def build_grid(spec: GridSpec) -> MomentumGrid:
    """Log-radial shells times equal-area directions.

    Radial nodes sit at the geometric midpoints of log-spaced cells on
    ``[k_min, k_max]``; each weight is the exact dGamma-measure of its cell.
    """
    if spec.radii is None:
        if not (spec.k_min > 0 and spec.k_max > spec.k_min):
            raise GridSpecError(f"need 0 < k_min < k_max, got [{spec.k_min}, {spec.k_max}]")
        if spec.n_radial < 1:
            raise GridSpecError("n_radial must be >= 1")
    if spec.directions is None and (spec.n_polar < 1 or spec.n_azimuth < 1):
        raise GridSpecError("angular counts must be >= 1")

    if spec.directions is None:
        dirs = _equal_area_directions(spec.n_polar, spec.n_azimuth)
    else:
        dirs = np.atleast_2d(np.asarray(spec.directions, dtype=float))
        if dirs.shape[1] != 3 or len(dirs) == 0:
            raise GridSpecError("directions must be a non-empty list of 3-vectors")
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    if spec.radii is None:
        edges = np.geomspace(spec.k_min, spec.k_max, spec.n_radial + 1)
        radii = np.sqrt(edges[:-1] * edges[1:])
    else:
        radii = np.asarray(spec.radii, dtype=float)
        if radii.ndim != 1 or len(radii) == 0 or np.any(radii <= 0):
            raise GridSpecError("explicit radii must be positive")
        edges = None

    momenta = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    if spec.weight is not None:
        weights = np.broadcast_to(np.asarray(spec.weight, dtype=float), (len(momenta),)).copy()
    elif edges is not None and spec.directions is None:
        cell = shell_measure(edges[:-1], edges[1:], 4.0 * np.pi / len(dirs))
        weights = np.repeat(cell, len(dirs))
    else:
        raise GridSpecError("explicit radii or directions need an explicit weight")
    return MomentumGrid.from_momenta(momenta, weights, spec)


def delta_gamma(grid: MomentumGrid, i: int, j: int) -> float:
    """Discrete delta for dGamma: ``1/w_i`` on the diagonal, zero elsewhere."""
    for idx in (i, j):
        if not 0 <= idx < grid.size:
            raise IndexError(f"grid index {idx} out of range for {grid.size} points")
    return 1.0 / grid.weights[i] if i == j else 0.0


# --------------------------------------------------------------------------
# vacuum profiles


@dataclass(frozen=True, eq=False)
class VacuumProfile:
    """Single-oscillator vacuum wave function ``O(k)`` sampled on a grid."""

    grid: MomentumGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        O = np.asarray(self.amplitudes, dtype=complex)
        if O.shape != (self.grid.size,):
            raise ShapeError(f"profile needs {self.grid.size} amplitudes, got shape {O.shape}")
        if not np.all(np.isfinite(O)):
            raise ProfileError("profile amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _frozen(O))

    @property
    def Z(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def total(self) -> float:
        return float(np.dot(self.grid.weights, self.Z))

    def normalized(self) -> "VacuumProfile":
        t = self.total()
        if not t > 0:
            raise ProfileError("profile has zero total measure")
        return VacuumProfile(self.grid, self.amplitudes / np.sqrt(t))

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.total() - 1.0) < tol

    def require_normalized(self, tol: float = 1e-12) -> None:
        if not self.is_normalized(tol):
            raise ProfileError(f"profile not normalized: sum w Z = {self.total()!r}")

    @classmethod
    def from_Z(cls, grid: MomentumGrid, Z, phase=None) -> "VacuumProfile":
        Z = np.asarray(Z, dtype=float)
        if np.any(Z < 0):
            raise ProfileError("Z must be non-negative")
        O = np.sqrt(Z).astype(complex)
        if phase is not None:
            O = O * np.exp(1j * np.asarray(phase, dtype=float))
        return cls(grid, O).normalized()


def _template_Z(r, template: str, params: dict) -> np.ndarray:
    if template == "constant":
        return np.ones_like(r)
    if template == "lognormal":
        eps = float(params.get("eps", 1.0))
        sigma = float(params.get("sigma", 1.0))
        return r**eps * np.exp(-((np.log(r) / sigma) ** 2))
    if template == "power_exp":
        p = float(params.get("power", 1.0))
        scale = float(params.get("scale", 1.0))
        return r**p * np.exp(-r / scale)
    raise ProfileError(f"unknown profile template {template!r}")


PROFILE_TEMPLATES = ("constant", "lognormal", "power_exp")


def make_profile(grid: MomentumGrid, template: str = "power_exp", **params) -> VacuumProfile:
    """Real positive profile ``O = sqrt(Z)`` from a named radial template, normalized on ``grid``.

    ``constant``: Z = const.  ``lognormal``: Z ~ |k|^eps exp(-(ln|k|/sigma)^2).
    ``power_exp``: Z ~ |k|^power exp(-|k|/scale).
    """
    Z = _template_Z(grid.energies, template, params)
    return VacuumProfile.from_Z(grid, Z)


def random_profile(grid: MomentumGrid, rng: np.random.Generator) -> VacuumProfile:
    O = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
    return VacuumProfile(grid, O).normalized()


# --------------------------------------------------------------------------
# polarized amplitudes f(k, s): arrays of shape (K, 2), helicity axis (+, -)


def polarized(grid: MomentumGrid, plus=0.0, minus=0.0) -> np.ndarray:
    f = np.zeros((grid.size, 2), dtype=complex)
    f[:, PLUS] = plus
    f[:, MINUS] = minus
    return f


def check_polarized(grid: MomentumGrid, f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape != (grid.size, 2):
        raise ShapeError(f"polarized amplitude must have shape ({grid.size}, 2), got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ShapeError("polarized amplitude has non-finite entries")
    return f


def random_polarized(grid: MomentumGrid, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.normal(size=(grid.size, 2)) + 1j * rng.normal(size=(grid.size, 2)))


def inner_product_Z(f, g, profile: VacuumProfile) -> complex:
    """``<f|g>_Z = sum_s sum_i w_i Z_i conj(f_is) g_is``."""
    grid = profile.grid
    f = check_polarized(grid, f)
    g = check_polarized(grid, g)
    return complex(np.sum(grid.weights * profile.Z * np.sum(f.conj() * g, axis=1)))


def write_grid_csv(path, grid: MomentumGrid, profile: Optional[VacuumProfile] = None) -> None:
    Z = profile.Z if profile is not None else np.full(grid.size, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k0", "k1", "k2", "k3", "w", "Z"])
        for p, wi, zi in zip(grid.points, grid.weights, Z):
            w.writerow([repr(float(x)) for x in (*p, wi, zi)])
