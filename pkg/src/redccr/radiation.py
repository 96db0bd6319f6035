"""Radiation from a classical transverse current and its infrared behaviour.

The out-field map is the displacement by the current amplitude ``j(k, s)``;
the S-matrix phase in the centre of the algebra is dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from . import ensemble as ens
from .grid import (MINUS, PLUS, GridSpec, MomentumGrid, VacuumProfile, build_grid, check_polarized,
                   make_profile, minkowski)
from .poincare import grid_frames


@dataclass(frozen=True, eq=False)
class CurrentSpec:
    """Helicity amplitudes ``j(k_i, s)`` of a transverse current.

    ``residual`` is the per-point reconstruction error when the amplitudes
    come from :func:`project_current`; zero for directly supplied values.
    """

    grid: MomentumGrid
    amplitudes: np.ndarray
    residual: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", check_polarized(self.grid, self.amplitudes))

    @property
    def max_residual(self) -> float:
        return 0.0 if self.residual is None else float(np.max(self.residual))

    def is_transverse(self, tol: float = 1e-10) -> bool:
        return self.max_residual < tol


def project_current(J, grid: MomentumGrid) -> CurrentSpec:
    """Split ``J^a(k_i)`` (contravariant, shape (K, 4)) as ``conj(m) J_10' + m J_01'``.

    ``j(k, +)`` is the coefficient of ``m`` and ``j(k, -)`` that of ``conj(m)``;
    ``m . conj(m) = -1`` gives both by contraction.
    """
    J = np.asarray(J, dtype=complex)
    if J.shape != (grid.size, 4):
        raise ValueError(f"current must have shape ({grid.size}, 4), got {J.shape}")
    fr = grid_frames(grid)
    j_minus = -minkowski(J, fr.m)
    j_plus = -minkowski(J, fr.mbar)
    rebuilt = fr.mbar * j_minus[:, None] + fr.m * j_plus[:, None]
    residual = np.linalg.norm(J - rebuilt, axis=1)
    amps = np.zeros((grid.size, 2), dtype=complex)
    amps[:, PLUS] = j_plus
    amps[:, MINUS] = j_minus
    return CurrentSpec(grid, amps, residual)


def soft_current(grid: MomentumGrid, strength: float = 1.0, angular: str = "isotropic",
                 uv_scale: Optional[float] = None) -> CurrentSpec:
    """Soft-photon template ``sum_s |j(k, s)|^2 = strength * a(theta)^2 / |k|^2``.

    ``angular`` is ``isotropic`` (a = 1) or ``dipole`` (a = sqrt(3/2) sin theta);
    ``uv_scale`` multiplies by ``exp(-|k|^2 / (2 uv_scale^2))``.
    """
    r = grid.energies
    if angular == "isotropic":
        a = np.ones_like(r)
    elif angular == "dipole":
        sin_t = np.linalg.norm(grid.momenta[:, :2], axis=1) / r
        a = np.sqrt(1.5) * sin_t
    else:
        raise ValueError(f"unknown angular profile {angular!r}")
    mag = np.sqrt(strength / 2.0) * a / r
    if uv_scale is not None:
        mag = mag * np.exp(-0.5 * (r / uv_scale) ** 2)
    return CurrentSpec(grid, np.stack([mag, mag], axis=1).astype(complex))


def out_field_shift(j, state: ens.EnsembleState, method: str = "auto") -> ens.EnsembleState:
    """Out state of the scattering: the displacement by ``j`` applied to ``state``."""
    amps = j.amplitudes if isinstance(j, CurrentSpec) else j
    return ens.displacement_apply(amps, state, method=method)


def out_field_residual(j, f, grid: MomentumGrid, n_max: int, N: int = 2, level: Optional[int] = None) -> float:
    """Residual of ``a(f)_out = a(f)_in + I(sum_s conj(f) j)`` as a matrix identity."""
    amps = j.amplitudes if isinstance(j, CurrentSpec) else j
    return ens.displacement_conjugation_residual(amps, f, grid, n_max, N, level)


@dataclass(frozen=True)
class RadiationReport:
    n_reducible: float
    n_fock: float
    P_reducible: tuple
    P_fock: tuple
    params: dict = field(default_factory=dict)


def radiation_expectations(j, profile: VacuumProfile, params: Optional[dict] = None) -> RadiationReport:
    """Average photon number and four-momentum, Z-weighted (reducible) and bare (Fock)."""
    grid = profile.grid
    amps = j.amplitudes if isinstance(j, CurrentSpec) else check_polarized(grid, j)
    dens = grid.weights * np.sum(np.abs(amps) ** 2, axis=1)
    red = dens * profile.Z
    return RadiationReport(
        n_reducible=float(red.sum()),
        n_fock=float(dens.sum()),
        P_reducible=tuple(float(v) for v in red @ grid.points),
        P_fock=tuple(float(v) for v in dens @ grid.points),
        params=dict(params or {}),
    )


def dense_number_expectation(j, profile: VacuumProfile, N: int, n_max: int) -> float:
    """``<O_j| n |O_j>`` from dense N-oscillator coherent states."""
    amps = j.amplitudes if isinstance(j, CurrentSpec) else j
    st = ens.to_dense(ens.ensemble_coherent(profile, amps, N, n_max))
    return float(st.inner(ens.apply_collective(ens.number(), st)).real)


# --------------------------------------------------------------------------
# infrared sweep


@dataclass
class SweepResult:
    rows: list
    certification: dict


def _relative_steps(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return np.abs(np.diff(v)) / np.abs(v[1:])


def certify(k_mins: Sequence[float], n_fock: Sequence[float], n_red: Sequence[float],
            r2_min: float = 0.999, cauchy_tol: float = 0.01, cauchy_steps: int = 3) -> dict:
    """Regression of each column on ln(1/k_min) plus a Cauchy test on the final steps."""
    x = np.log(1.0 / np.asarray(k_mins, dtype=float))
    out = {}
    for name, col in (("fock", n_fock), ("reducible", n_red)):
        col = np.asarray(col, dtype=float)
        if len(col) >= 3:
            fit = linregress(x, col)
            slope, r2 = float(fit.slope), float(fit.rvalue**2)
        else:
            slope, r2 = float("nan"), float("nan")
        steps = _relative_steps(col)[-cauchy_steps:] if len(col) > 1 else np.array([])
        cauchy = float(steps.max()) if len(steps) else float("nan")
        increasing = bool(np.all(np.diff(col) > 0)) if len(col) > 1 else False
        converged = bool(len(steps) >= cauchy_steps and cauchy < cauchy_tol)
        out[name] = {
            "slope": slope,
            "r2": r2,
            "strictly_increasing": increasing,
            "cauchy_max_rel_step": cauchy,
            "converged": converged,
            "diverges": bool(increasing and r2 > r2_min and not converged),
        }
    out["r2_min"] = r2_min
    out["cauchy_tol"] = cauchy_tol
    out["cauchy_steps"] = cauchy_steps
    return out


def ir_sweep(k_mins: Sequence[float], k_max: float = 10.0, n_radial: int = 64, n_polar: int = 2,
             n_azimuth: int = 4, current: Optional[dict] = None, profile: Optional[dict] = None,
             r2_min: float = 0.999, cauchy_tol: float = 0.01) -> SweepResult:
    """Radiation expectations on log grids ``[k_min, k_max]`` for each ``k_min``.

    ``current`` holds :func:`soft_current` keywords, ``profile`` a ``template``
    name plus its parameters.  The UV end and shell count stay fixed.
    """
    k_mins = [float(k) for k in k_mins]
    if not k_mins:
        raise ValueError("k_min list is empty")
    if any(b >= a for a, b in zip(k_mins, k_mins[1:])):
        raise ValueError("k_min list must be strictly decreasing")
    current = dict(current or {})
    profile = dict(profile or {"template": "power_exp", "power": 1.0, "scale": 1.0})
    template = profile.pop("template", "power_exp")
    rows = []
    for kmin in k_mins:
        grid = build_grid(GridSpec(kmin, k_max, n_radial, n_polar, n_azimuth))
        prof = make_profile(grid, template, **profile)
        rep = radiation_expectations(soft_current(grid, **current), prof)
        rows.append({
            "k_min": kmin,
            "n_red": rep.n_reducible,
            "n_fock": rep.n_fock,
            "P0_red": rep.P_reducible[0],
            "P0_fock": rep.P_fock[0],
            "P3_red": rep.P_reducible[3],
            "P3_fock": rep.P_fock[3],
        })
    cert = certify(k_mins, [r["n_fock"] for r in rows], [r["n_red"] for r in rows], r2_min, cauchy_tol)
    return SweepResult(rows, cert)


def halving_sweep(k_min0: float, halvings: int) -> list[float]:
    return [k_min0 / 2**h for h in range(halvings + 1)]
