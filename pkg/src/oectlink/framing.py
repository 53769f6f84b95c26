"""Symbol framing: period policy, decision window, encoding, emission draws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import (Medium, ScenarioError, Scheme, Species, SpeciesChannel,
                     Timing, TimingPolicy, alphabet_levels,
                     effective_diffusivity)

# Means below this use exact Poisson sampling; above it a matched-moment
# normal approximation (long-range LoD searches reach means of 1e6).
POISSON_NORMAL_THRESHOLD = 30.0


@dataclass(frozen=True)
class SymbolFrame:
    """One transmitted symbol: alphabet index, species, emission counts,
    and the timing it was framed with."""

    index: int
    species: Species
    mean_count: float
    realized_count: int
    t_s: float
    w: float

    def __post_init__(self):
        if self.realized_count < 0:
            raise ScenarioError("realized_count out of range")
        if self.w > self.t_s:
            raise ScenarioError("W must not exceed T_s")


def symbol_period(r: float, timing: Timing, medium: Medium,
                  selective: tuple[SpeciesChannel, ...]) -> float:
    """Distance-dependent symbol period.

    t_char = c_t r^2 / D_eff with the slower selective diffusivity, so the
    period is conservative for both species; the binding-aware policy
    replaces t_char with max(t_char, kappa / mean k_off). The result is
    max(T_min, ceil((1+g) t_char / dt) dt).
    """
    if r <= 0.0:
        raise ScenarioError("r out of range")
    d_slow = min(ch.d_aq for ch in selective)
    d_eff = effective_diffusivity(d_slow, medium.lam)
    t_char = timing.c_t * r * r / d_eff
    if timing.policy is TimingPolicy.BINDING_AWARE:
        k_off_bar = sum(ch.k_off for ch in selective) / len(selective)
        if k_off_bar > 0.0:
            t_char = max(t_char, timing.kappa / k_off_bar)
    raw = (1.0 + timing.guard) * t_char
    steps = math.ceil(raw / timing.dt - 1e-9)
    return max(timing.t_min, steps * timing.dt)


def decision_window(t_s: float, eta: float, dt: float) -> float:
    """Tail-anchored window W = eta T_s, rounded to the nearest dt multiple
    and at least one step."""
    if not (0.0 < eta <= 1.0):
        raise ScenarioError("eta out of range")
    steps = max(1, int(math.floor(eta * t_s / dt + 0.5)))
    return steps * dt


def encode(index: int, scheme: Scheme, n_m: float,
           csk_axis: Species = Species.DA) -> tuple[Species, float]:
    """Map a symbol index to (species, mean emission count)."""
    levels = alphabet_levels(scheme, n_m, csk_axis)
    if not (0 <= index < len(levels)):
        raise ScenarioError(f"symbol index {index} out of range")
    return levels[index]


def draw_emission(mean_count: float, rng: np.random.Generator) -> int:
    """Realized emitted molecule count: Poisson with the given mean."""
    if mean_count < 0.0:
        raise ScenarioError("mean_count out of range")
    if mean_count == 0.0:
        return 0
    if mean_count < POISSON_NORMAL_THRESHOLD:
        return int(rng.poisson(mean_count))
    k = math.floor(mean_count + math.sqrt(mean_count) * rng.standard_normal()
                   + 0.5)
    return max(int(k), 0)


def draw_emissions(mean_counts: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """Vectorized draw_emission; consumes the stream in a fixed order
    (exact Poisson draws first, then the normal-approximation block)."""
    means = np.asarray(mean_counts, dtype=float)
    if np.any(means < 0.0):
        raise ScenarioError("mean_count out of range")
    out = np.zeros(means.shape, dtype=np.int64)
    small = (means > 0.0) & (means < POISSON_NORMAL_THRESHOLD)
    large = means >= POISSON_NORMAL_THRESHOLD
    if np.any(small):
        out[small] = rng.poisson(means[small])
    if np.any(large):
        mu = means[large]
        k = np.floor(mu + np.sqrt(mu) * rng.standard_normal(mu.size) + 0.5)
        out[large] = np.maximum(k, 0.0).astype(np.int64)
    return out
