"""Exact finite-N vacuum correlators from coincidence classes, and their N -> infinity limit.

Assigning each of the m collective ``I`` factors to one of N oscillators
induces a set partition of ``{0..m-1}`` (indices sharing an oscillator).
A partition with b blocks is hit by ``N (N-1) ... (N-b+1)`` assignments, and
each block contributes one ``Z``-weighted integral of the product of its
contractions.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Iterator, Sequence

import numpy as np

from .grid import VacuumProfile, check_polarized

PERMANENT_CAP = 12


def restricted_growth_strings(m: int) -> Iterator[tuple]:
    """All restricted growth strings of length m (a[0] = 0, a[j] <= 1 + max(a[:j]))."""
    if m == 0:
        yield ()
        return
    a = [0] * m
    b = [1] * m  # b[j] = 1 + max(a[:j])
    while True:
        yield tuple(a)
        j = m - 1
        while j > 0 and a[j] == b[j]:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        for t in range(j + 1, m):
            a[t] = 0
            b[t] = max(b[j], a[j] + 1)


def set_partitions(m: int) -> Iterator[tuple]:
    """Set partitions of ``range(m)`` as tuples of blocks (tuples of indices)."""
    for rgs in restricted_growth_strings(m):
        nb = max(rgs) + 1 if m else 0
        blocks = [[] for _ in range(nb)]
        for idx, label in enumerate(rgs):
            blocks[label].append(idx)
        yield tuple(tuple(b) for b in blocks)


def falling_factorial(N: int, b: int) -> int:
    return math.perm(N, b) if b <= N else 0


def multiplicity_weight(N: int, m: int, n_blocks: int) -> Fraction:
    """Fraction of the N^m oscillator assignments that realise one given partition."""
    return Fraction(falling_factorial(N, n_blocks), N**m)


@lru_cache(maxsize=None)
def _block_count_histogram(m: int) -> tuple:
    hist = [0] * (m + 1)
    for rgs in restricted_growth_strings(m):
        hist[(max(rgs) + 1) if m else 0] += 1
    return tuple(hist)


def class_probability_exact(m: int, N: int, j: int) -> Fraction:
    """Probability of the class with j coincidences (``m - j`` blocks), as a Fraction."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if m < 1 or not 0 <= j <= m - 1:
        raise ValueError(f"need 0 <= j <= m-1 with m >= 1, got m={m}, j={j}")
    return _block_count_histogram(m)[m - j] * multiplicity_weight(N, m, m - j)


def class_probability(m: int, N: int, j: int) -> float:
    return float(class_probability_exact(m, N, j))


def contraction_tensor(fs: Sequence, gs: Sequence, profile: VacuumProfile) -> np.ndarray:
    """``H[a, b, i] = sum_s conj(f_a(k_i, s)) g_b(k_i, s)``."""
    grid = profile.grid
    F = np.stack([check_polarized(grid, f) for f in fs])
    G = np.stack([check_polarized(grid, g) for g in gs])
    return np.einsum("ais,bis->abi", F.conj(), G)


def gram_matrix(fs: Sequence, gs: Sequence, profile: VacuumProfile) -> np.ndarray:
    """``G[a, b] = <f_a|g_b>_Z``."""
    if not fs or not gs:
        return np.zeros((len(fs), len(gs)), dtype=complex)
    wz = profile.grid.weights * profile.Z
    return contraction_tensor(fs, gs, profile) @ wz


def finite_N_correlator(fs: Sequence, gs: Sequence, profile: VacuumProfile, N: int) -> complex:
    """Exact ``<O| a(f_1)..a(f_m) a(g_1)^+..a(g_m')^+ |O>`` of the untruncated N-oscillator algebra."""
    if N < 1:
        raise ValueError("N must be >= 1")
    m = len(fs)
    if m != len(gs):
        return 0j
    if m == 0:
        return 1 + 0j
    wz = profile.grid.weights * profile.Z
    H = contraction_tensor(fs, gs, profile)
    parts = [(float(multiplicity_weight(N, m, len(P))), P) for P in set_partitions(m)]
    parts = [(w, P) for w, P in parts if w != 0.0]
    rows = np.arange(m)
    total = 0j
    for sigma in permutations(range(m)):
        h = H[rows, list(sigma)]  # (m, K): contraction of f_a with g_sigma(a)
        acc = 0j
        for w, P in parts:
            term = 1 + 0j
            for block in P:
                term *= np.dot(wz, np.prod(h[list(block)], axis=0))
            acc += w * term
        total += acc
    return complex(total)


def permanent(A) -> complex:
    """Ryser's formula with Gray-code subset updates, O(2^m m)."""
    A = np.asarray(A, dtype=complex)
    m = A.shape[0]
    if A.shape != (m, m):
        raise ValueError("permanent needs a square matrix")
    if m == 0:
        return 1 + 0j
    if m > PERMANENT_CAP:
        raise ValueError(f"exact permanent capped at m={PERMANENT_CAP}, got {m}")
    row_sums = np.zeros(m, dtype=complex)
    total = 0j
    sign = 1 if m % 2 == 0 else -1  # (-1)^(m - |S|) starts at |S| = 0
    in_set = [False] * m
    for k in range(1, 2**m):
        # Gray code: flip the column at the lowest set bit of k
        col = (k & -k).bit_length() - 1
        if in_set[col]:
            row_sums -= A[:, col]
        else:
            row_sums += A[:, col]
        in_set[col] = not in_set[col]
        sign = -sign
        total += sign * np.prod(row_sums)
    return complex(total)


def permanent_bruteforce(A) -> complex:
    A = np.asarray(A, dtype=complex)
    m = A.shape[0]
    return complex(sum(np.prod(A[np.arange(m), list(s)]) for s in permutations(range(m))))


def limit_correlator(fs: Sequence, gs: Sequence, profile: VacuumProfile) -> complex:
    """N -> infinity limit: the permanent of the Z-weighted Gram matrix."""
    if len(fs) != len(gs):
        raise ValueError("limit correlator needs m == m'; the m != m' limit is zero")
    return permanent(gram_matrix(fs, gs, profile))


def singleton_partition_sum(fs: Sequence, gs: Sequence, profile: VacuumProfile) -> complex:
    """Partition sum kept only on the all-singletons partition with unit weight.

    Every I_k in a surviving term is replaced by one factor Z(k); this must
    reproduce :func:`limit_correlator`.
    """
    m = len(fs)
    wz = profile.grid.weights * profile.Z
    H = contraction_tensor(fs, gs, profile) if m else None
    total = 0j
    for sigma in permutations(range(m)):
        term = 1 + 0j
        for a in range(m):
            term *= np.dot(wz, H[a, sigma[a]])
        total += term
    return complex(total)


def convergence_table(fs: Sequence, gs: Sequence, profile: VacuumProfile, Ns: Sequence[int]) -> list[dict]:
    limit = limit_correlator(fs, gs, profile) if len(fs) == len(gs) else 0j
    rows = []
    for N in Ns:
        val = finite_N_correlator(fs, gs, profile, N)
        rows.append({"N": N, "finite_value_re": val.real, "finite_value_im": val.imag,
                     "limit_re": limit.real, "limit_im": limit.imag, "abs_error": abs(val - limit)})
    return rows


def loglog_slope(Ns, errors) -> float:
    """Least-squares slope of log(error) against log(N)."""
    x = np.log(np.asarray(Ns, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
