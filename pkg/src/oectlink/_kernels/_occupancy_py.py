"""Reference (pure Python) occupancy kernels.

Semantics documented in the package __init__; the Cython backend mirrors
this module draw for draw.
"""

from __future__ import annotations

import math

import numpy as np

EXACT_TRIALS_THRESHOLD = 100_000


def _binom(rng: np.random.Generator, n: int, p: float) -> int:
    """One birth/death event count. Exact below the trial threshold,
    matched-moment normal approximation above it."""
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    if n >= EXACT_TRIALS_THRESHOLD:
        mu = n * p
        sd = math.sqrt(mu * (1.0 - p))
        # floor(x + 0.5) matches the compiled kernel's rounding exactly
        k = int(math.floor(mu + sd * rng.standard_normal() + 0.5))
        return min(max(k, 0), n)
    return int(rng.binomial(n, p))


def occupancy_symbol(conc, w_steps: int, kon_dt: float, p_off: float,
                     n_apt: int, nb0: int, rng: np.random.Generator,
                     ) -> tuple[float, int]:
    """Stochastic occupancy over one symbol driven by the per-step molar
    concentration `conc`; returns (window sum, final occupancy)."""
    nb = nb0
    total = 0.0
    n_steps = len(conc)
    first_win = n_steps - w_steps
    for j in range(n_steps):
        if j >= first_win:
            total += nb
        p_on = -math.expm1(-kon_dt * conc[j])
        gained = _binom(rng, n_apt - nb, p_on)
        lost = _binom(rng, nb, p_off)
        nb = min(max(nb + gained - lost, 0), n_apt)
    return total, nb


def occupancy_window_sums(curve, counts, n_steps: int, w_steps: int,
                          kon_dt: float, p_off: float, n_apt: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Batch of independent symbols (occupancy reset to zero at each symbol
    start). Symbol i is driven by counts[i] * curve[:n_steps]."""
    counts = np.asarray(counts, dtype=float)
    sums = np.empty(len(counts))
    for i, scale in enumerate(counts):
        sums[i], _ = occupancy_symbol(scale * curve[:n_steps], w_steps,
                                      kon_dt, p_off, n_apt, 0, rng)
    return sums


def occupancy_trajectory(conc, kon_dt: float, p_off: float, n_apt: int,
                         nb0: int, rng: np.random.Generator) -> np.ndarray:
    """Occupancy after each step (length matches conc)."""
    nb = nb0
    out = np.empty(len(conc), dtype=np.int64)
    for j in range(len(conc)):
        p_on = -math.expm1(-kon_dt * conc[j])
        gained = _binom(rng, n_apt - nb, p_on)
        lost = _binom(rng, nb, p_off)
        nb = min(max(nb + gained - lost, 0), n_apt)
        out[j] = nb
    return out


def mean_occupancy_symbol(conc, w_steps: int, kon_dt: float, koff_dt: float,
                          n_apt: float, nb0: float) -> tuple[float, float]:
    """Deterministic mean-field counterpart of occupancy_symbol (explicit
    Euler steps of the Langmuir rate equation, clamped to [0, N_apt])."""
    nb = nb0
    total = 0.0
    n_steps = len(conc)
    first_win = n_steps - w_steps
    for j in range(n_steps):
        if j >= first_win:
            total += nb
        nb += kon_dt * conc[j] * (n_apt - nb) - koff_dt * nb
        nb = min(max(nb, 0.0), n_apt)
    return total, nb


def mean_occupancy_window_sums(curve, counts, n_steps: int, w_steps: int,
                               kon_dt: float, koff_dt: float, n_apt: float,
                               ) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    sums = np.empty(len(counts))
    for i, scale in enumerate(counts):
        sums[i], _ = mean_occupancy_symbol(scale * curve[:n_steps], w_steps,
                                           kon_dt, koff_dt, n_apt, 0.0)
    return sums
