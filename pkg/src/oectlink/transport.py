"""Restricted-diffusion transport: point-source Green's function with
clearance, finite-burst convolution, tail-window coefficients, and the ISI
memory-depth rule.

All operations are pure functions of their arguments and safe to evaluate
concurrently. Adaptive quadrature targets 1e-18 M absolute / 1e-9 relative
accuracy because window-averaged concentrations reach sub-pM scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .config import Medium, ScenarioError
from .constants import PER_M3_PER_MOLAR

QUAD_ABS_TOL_MOLAR = 1e-18
QUAD_REL_TOL = 1e-9

ISI_EPSILON = 1e-3   # truncation tolerance relative to h_0
ISI_K_MIN = 2
ISI_K_MAX = 60


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the documented tolerance."""


@dataclass(frozen=True)
class WindowCoefficients:
    """Tail-window transport coefficients h_0..h_{K-1} in molar units per
    emitted molecule, all computed with the same quadrature settings."""

    r: float
    t_s: float
    w: float
    values: tuple[float, ...]
    k_isi: int

    def __post_init__(self):
        if any(v < 0.0 for v in self.values):
            raise ValueError("window coefficients must be non-negative")
        if not (ISI_K_MIN <= self.k_isi <= ISI_K_MAX):
            raise ValueError("memory depth outside [2, K_max]")


def greens_value(r: float, t, medium: Medium, d_eff: float):
    """Number density per emitted molecule at distance r and lag t.

    g(r,t) = exp(-r^2/(4 D_eff t) - k_clear t) / (alpha (4 pi D_eff t)^{3/2})
    for t > 0 and exactly 0 otherwise. Accepts scalar or array t.
    """
    if r <= 0.0:
        raise ScenarioError("r out of range")
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    pos = t_arr > 0.0
    if np.any(pos):
        tp = t_arr[pos]
        denom = medium.alpha * np.power(4.0 * math.pi * d_eff * tp, 1.5)
        expo = -(r * r) / (4.0 * d_eff * tp) - medium.k_clear * tp
        out[pos] = np.exp(expo) / denom
    return out if out.ndim else float(out)


def _quad(func, lo: float, hi: float, *, points=None) -> float:
    """quad wrapper that enforces the documented molar tolerances."""
    if hi <= lo:
        return 0.0
    val, err = integrate.quad(func, lo, hi, epsabs=QUAD_ABS_TOL_MOLAR,
                              epsrel=QUAD_REL_TOL, limit=200, points=points)
    budget = max(QUAD_ABS_TOL_MOLAR, abs(val) * QUAD_REL_TOL) * 10.0
    if err > budget:
        raise QuadratureError(
            f"achieved error {err:.3e} exceeds tolerance {budget:.3e}")
    return val


def burst_concentration(r: float, t: float, n_emit: float, t_rel: float,
                        medium: Medium, d_eff: float) -> float:
    """Molar concentration from a rectangular burst of n_emit molecules
    released at constant rate over [0, t_rel), observed at lag t.

    Causal convolution of the emission rate with the Green's function,
    converted from number density with 1 M = 1000 N_A molecules/m^3.
    """
    if n_emit < 0.0:
        raise ScenarioError("N_emit out of range")
    if t_rel <= 0.0:
        raise ScenarioError("T_rel out of range")
    if t <= 0.0 or n_emit == 0.0:
        return 0.0
    rate_molar = n_emit / t_rel / PER_M3_PER_MOLAR

    def integrand(u):
        # molar-rate units so the quad tolerances apply to the result
        return rate_molar * greens_value(r, u, medium, d_eff)

    lo = max(0.0, t - t_rel)
    peak = (r * r) / (6.0 * d_eff)
    pts = [peak] if lo < peak < t else None
    return _quad(integrand, lo, t, points=pts)


def window_coefficient(r: float, t_s: float, w: float, k: int,
                       medium: Medium, d_eff: float) -> float:
    """Molar tail-window coefficient h_k: contribution per emitted molecule
    of the symbol sent k intervals earlier to the window-averaged
    concentration, h_k = (1/W) int_{T_s-W}^{T_s} g(r, t + k T_s) dt / (1000 N_A).
    """
    if not (0.0 < w <= t_s):
        raise ScenarioError("W out of range")
    if k < 0:
        raise ScenarioError("k out of range")

    def integrand(u):
        return greens_value(r, u, medium, d_eff) / PER_M3_PER_MOLAR

    lo = k * t_s + (t_s - w)
    hi = (k + 1) * t_s
    peak = (r * r) / (6.0 * d_eff)
    pts = [peak] if lo < peak < hi else None
    return _quad(integrand, lo, hi, points=pts) / w


def window_coefficients(r: float, t_s: float, w: float, medium: Medium,
                        d_eff: float, k_max: int = ISI_K_MAX,
                        ) -> WindowCoefficients:
    """Compute h_0..h_{K-1} and select the ISI memory depth K."""
    values = [window_coefficient(r, t_s, w, k, medium, d_eff)
              for k in range(k_max)]
    k_isi = _memory_depth_from_values(values, t_s, medium.k_clear)
    return WindowCoefficients(r=r, t_s=t_s, w=w,
                              values=tuple(values[:k_isi]), k_isi=k_isi)


def _memory_depth_from_values(values: list[float], t_s: float,
                              k_clear: float) -> int:
    h0 = values[0]
    if h0 <= 0.0:
        raise ScenarioError("h_0 must be positive")
    k_max = len(values)
    # Tail beyond the last computed coefficient: clearance gives the
    # per-step envelope h_{k+1} <= h_k exp(-k_clear T_s); with no clearance
    # the tail is summed explicitly to the cap.
    if k_clear > 0.0:
        q = math.exp(-k_clear * t_s)
        beyond = values[-1] * q / (1.0 - q)
    else:
        beyond = 0.0
    tail = beyond + sum(values)
    budget = ISI_EPSILON * h0
    for k in range(k_max):
        if k >= ISI_K_MIN and tail <= budget:
            return k
        tail -= values[k]
    return k_max


def isi_memory_depth(r: float, t_s: float, w: float, medium: Medium,
                     d_eff: float) -> int:
    """Smallest K >= 2 with sum_{k>=K} h_k <= 1e-3 h_0, capped at 60."""
    return window_coefficients(r, t_s, w, medium, d_eff).k_isi


def windowed_concentration(history_counts, coeffs: WindowCoefficients) -> float:
    """Window-averaged molar concentration from realized emission counts,
    newest first; missing history is treated as zero."""
    if len(history_counts) == 0:
        raise ScenarioError("history must contain at least one symbol")
    total = 0.0
    for count, h in zip(history_counts, coeffs.values):
        total += count * h
    return total


# ---------------------------------------------------------------------------
# Grid-resolved concentration curves for the per-step simulation

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)   # mapped to [0, 1]
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def grid_concentration_curve(r: float, medium: Medium, d_eff: float,
                             dt: float, n_steps: int, t_rel: float,
                             ) -> np.ndarray:
    """Per-molecule step-averaged molar concentration on the dt grid.

    The rectangular burst is resolved on the grid (t_rel rounds to at least
    one step). Entry j is the average concentration over [j dt, (j+1) dt)
    from one molecule released at t=0, evaluated with 6-point Gauss-Legendre
    per step and the exact burst convolution across burst steps.
    """
    edges = np.arange(n_steps, dtype=float) * dt
    # Step-averaged Green's value per step, (1/dt) * integral over the step.
    nodes = edges[:, None] + dt * _GL_NODES[None, :]
    g_avg = greens_value(r, nodes, medium, d_eff) @ _GL_WEIGHTS
    m_rel = max(1, int(round(t_rel / dt)))
    if m_rel > 1:
        kernel = np.full(m_rel, 1.0 / m_rel)
        g_avg = np.convolve(g_avg, kernel)[:n_steps]
    return g_avg / PER_M3_PER_MOLAR
