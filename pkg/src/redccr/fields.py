"""Field-operator matrix elements: one-photon vectors, two-point products, coherent averages."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import ensemble as ens
from .grid import METRIC, MINUS, PLUS, VacuumProfile, check_polarized, minkowski, polarized
from .oscillator import OscillatorState
from .poincare import grid_frames

INV_METRIC = METRIC  # diag(1,-1,-1,-1) is its own inverse

FieldVector = list  # four OscillatorState components, covariant index a


def _lowered_frame(grid):
    fr = grid_frames(grid)
    return fr.m @ METRIC, fr.mbar @ METRIC, fr.e


def one_photon_vector(x, profile: VacuumProfile, n_max: int = 1) -> FieldVector:
    """Components of ``A_a(x)|O>`` for one oscillator.

    Component ``a`` holds ``-i e^{ik.x} O(k) m_a(k)`` at ``(n+, n-) = (0, 1)``
    and ``-i e^{ik.x} O(k) conj(m)_a(k)`` at ``(1, 0)``.
    """
    grid = profile.grid
    m_lo, mbar_lo, _ = _lowered_frame(grid)
    ph = -1j * np.exp(1j * minkowski(grid.points, np.asarray(x, dtype=float))) * profile.amplitudes
    comps = []
    for a in range(4):
        amps = np.zeros((grid.size, n_max + 1, n_max + 1), dtype=complex)
        amps[:, 0, 1] = ph * m_lo[:, a]
        amps[:, 1, 0] = ph * mbar_lo[:, a]
        comps.append(OscillatorState(grid, amps))
    return comps


def contract(u: Sequence, v: Sequence, metric=INV_METRIC) -> complex:
    """``sum_ab (-g^ab) <u_a|v_b>``."""
    return complex(sum(-metric[a, b] * u[a].inner(v[b]) for a in range(4) for b in range(4) if metric[a, b]))


def two_point_product(x, y, profile: VacuumProfile) -> complex:
    """``<A_a(y)| (-g^ab) |A_b(x)> = 2 sum_i w_i Z_i exp(i k_i.(x - y))``."""
    grid = profile.grid
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return complex(2.0 * np.sum(grid.weights * profile.Z * np.exp(1j * minkowski(grid.points, d))))


def two_point_contraction(x, y, profile: VacuumProfile) -> complex:
    """Same quantity from explicit one-photon vectors."""
    return contract(one_photon_vector(y, profile), one_photon_vector(x, profile))


def _potential_smearings(x, profile: VacuumProfile):
    """Smearing functions of the annihilation and creation parts of ``A_a(x)``, per component."""
    grid = profile.grid
    m_lo, mbar_lo, _ = _lowered_frame(grid)
    e_pos = np.exp(1j * minkowski(grid.points, np.asarray(x, dtype=float)))
    ann, cre = [], []
    for a in range(4):
        # i m_a a(k,+) e^{-ikx} + i mbar_a a(k,-) e^{-ikx}  ==  a(h), conj(h) = i m e^{-ikx}
        ann.append(polarized(grid, plus=-1j * np.conj(m_lo[:, a]) * e_pos, minus=-1j * np.conj(mbar_lo[:, a]) * e_pos))
        # -i m_a a(k,-)^+ e^{ikx} - i mbar_a a(k,+)^+ e^{ikx}
        cre.append(polarized(grid, plus=-1j * mbar_lo[:, a] * e_pos, minus=-1j * m_lo[:, a] * e_pos))
    return ann, cre


def collective_potential_vector(x, profile: VacuumProfile, N: int, n_max: int = 1):
    """``A_a(x)|O>`` for the N-oscillator ensemble, built densely from collective operators."""
    vac = ens.to_dense(ens.ensemble_vacuum(profile, N, n_max))
    ann, cre = _potential_smearings(x, profile)
    return [ens.apply_collective(ens.annihilation(h), vac) + ens.apply_collective(ens.creation(g), vac)
            for h, g in zip(ann, cre)]


def _negative_frequency_smearings(x, profile: VacuumProfile):
    """``^-F_ab(x) = a(f_ab) + a(g_ab)^+`` with the smearings returned as (4, 4) nested lists."""
    grid = profile.grid
    e = grid_frames(grid).e
    ph = np.exp(1j * minkowski(grid.points, np.asarray(x, dtype=float)))
    fs = [[polarized(grid, minus=np.conj(e[:, a, b]) * ph) for b in range(4)] for a in range(4)]
    gs = [[polarized(grid, plus=e[:, a, b] * ph) for b in range(4)] for a in range(4)]
    return fs, gs


def coherent_field_average(x, profile: VacuumProfile, alpha) -> np.ndarray:
    """``sum_i w_i e_ab(k_i) Z_i (alpha(k_i,-) e^{-ik.x} + conj(alpha(k_i,+)) e^{ik.x})``.

    The negative-frequency (``e_ab``) part of the field strength; it depends
    on ``alpha`` only through ``Z alpha`` and not on the ensemble size.
    """
    grid = profile.grid
    alpha = check_polarized(grid, alpha)
    e = grid_frames(grid).e
    kx = minkowski(grid.points, np.asarray(x, dtype=float))
    amp = alpha[:, MINUS] * np.exp(-1j * kx) + np.conj(alpha[:, PLUS]) * np.exp(1j * kx)
    return np.einsum("k,kab->ab", grid.weights * profile.Z * amp, e)


def coherent_field_average_dense(x, profile: VacuumProfile, alpha, N: int, n_max: int) -> np.ndarray:
    """The same average as a matrix element between dense N-oscillator coherent states."""
    state = ens.to_dense(ens.ensemble_coherent(profile, alpha, N, n_max))
    fs, gs = _negative_frequency_smearings(x, profile)
    out = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(a + 1, 4):
            op = ens.apply_collective(ens.annihilation(fs[a][b]), state) + \
                ens.apply_collective(ens.creation(gs[a][b]), state)
            out[a, b] = state.inner(op)
            out[b, a] = -out[a, b]
    return out


def hermitian_field_average(x, profile: VacuumProfile, alpha) -> np.ndarray:
    """Derived quantity: the average plus its complex conjugate (the ``conj(e_ab)`` part).

    Treating this as the measurable classical field strength is an
    interpretation; only the negative-frequency part is computed directly.
    """
    T = coherent_field_average(x, profile, alpha)
    return T + T.conj()


def field_scan(profile: VacuumProfile, alpha, ts: Sequence[float], direction=(1.0, 0.0, 0.0, 0.0)) -> list[dict]:
    """Coherent field average along ``x = t * direction``; one row per t."""
    rows = []
    d = np.asarray(direction, dtype=float)
    for t in ts:
        T = coherent_field_average(t * d, profile, alpha)
        row = {"t": float(t)}
        for a in range(4):
            for b in range(a + 1, 4):
                row[f"re_{a}{b}"] = float(T[a, b].real)
                row[f"im_{a}{b}"] = float(T[a, b].imag)
        rows.append(row)
    return rows
