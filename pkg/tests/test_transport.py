import math

import numpy as np
import pytest
from scipy import integrate

from oectlink.config import Medium, baseline_scenario, effective_diffusivity
from oectlink.constants import PER_M3_PER_MOLAR
from oectlink.transport import (WindowCoefficients, burst_concentration,
                                greens_value, grid_concentration_curve,
                                isi_memory_depth, window_coefficient,
                                window_coefficients, windowed_concentration)

D_EFF_DA = effective_diffusivity(4.9e-10, 1.6)


@pytest.fixture(scope="module")
def medium():
    return baseline_scenario().medium


def test_greens_causality(medium):
    assert greens_value(45e-6, -1.0, medium, D_EFF_DA) == 0.0
    assert greens_value(45e-6, 0.0, medium, D_EFF_DA) == 0.0


def test_greens_known_value(medium):
    # frozen from an independent evaluation of the closed form
    got = greens_value(45e-6, 1.763, medium, D_EFF_DA)
    assert got == pytest.approx(3.9686810786e12, rel=1e-9)


def test_greens_vectorized(medium):
    t = np.array([-1.0, 0.0, 0.5, 1.763])
    out = greens_value(45e-6, t, medium, D_EFF_DA)
    assert out[0] == out[1] == 0.0
    assert out[3] == pytest.approx(3.9686810786e12, rel=1e-9)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 100.0])
def test_mass_conservation(medium, t):
    # spatial integral of alpha*g over R^3, radial quadrature
    def shell(r):
        return 4.0 * math.pi * r * r * medium.alpha \
            * greens_value(r, t, medium, D_EFF_DA)

    sigma = math.sqrt(2.0 * D_EFF_DA * t)
    total, _ = integrate.quad(shell, 0.0, 60.0 * sigma, limit=200)
    assert total == pytest.approx(math.exp(-medium.k_clear * t), rel=1e-6)


def test_burst_zero_cases(medium):
    assert burst_concentration(45e-6, 1.0, 0.0, 0.01, medium, D_EFF_DA) == 0.0
    assert burst_concentration(45e-6, -2.0, 1e4, 0.01, medium, D_EFF_DA) == 0.0
    assert burst_concentration(45e-6, 0.0, 1e4, 0.01, medium, D_EFF_DA) == 0.0


def test_burst_matches_riemann_oracle(medium):
    # independent fine-grid Riemann evaluation of the burst convolution
    t, n_emit, t_rel = 1.77, 1.4e4, 0.01
    grid = np.linspace(t - t_rel, t, 20001)
    g = greens_value(45e-6, grid, medium, D_EFF_DA)
    expected = np.trapezoid(g, grid) * n_emit / t_rel / PER_M3_PER_MOLAR
    got = burst_concentration(45e-6, t, n_emit, t_rel, medium, D_EFF_DA)
    assert got == pytest.approx(expected, rel=1e-6)
    assert got == pytest.approx(9.2e-11, rel=0.01)


def test_burst_approaches_impulse(medium):
    # T_rel << t: burst result approaches N * g(r, t) / (1000 N_A)
    got = burst_concentration(45e-6, 1.77, 1.4e4, 0.01, medium, D_EFF_DA)
    impulse = 1.4e4 * greens_value(45e-6, 1.765, medium, D_EFF_DA) \
        / PER_M3_PER_MOLAR
    assert got == pytest.approx(impulse, rel=5e-3)


def test_window_coefficient_vs_riemann(medium):
    t_s, w = 36.5, 21.9
    h0 = window_coefficient(45e-6, t_s, w, 0, medium, D_EFF_DA)
    grid = np.arange(t_s - w, t_s, 1e-3) + 0.5e-3
    oracle = np.mean(greens_value(45e-6, grid, medium, D_EFF_DA)) \
        / PER_M3_PER_MOLAR
    assert h0 == pytest.approx(oracle, rel=1e-3)


def test_window_coefficient_clearance_tail():
    medium = Medium(alpha=0.2, lam=1.6, k_clear=1.0)
    h0 = window_coefficient(45e-6, 10.0, 6.0, 0, medium, D_EFF_DA)
    h12 = window_coefficient(45e-6, 10.0, 6.0, 12, medium, D_EFF_DA)
    assert h12 < 1e-30 * h0


def test_window_coefficient_linearity_in_conversion(medium):
    # h_k is linear in 1/(1000 N_A): doubling the divisor halves h_k
    h = window_coefficient(45e-6, 36.5, 21.9, 0, medium, D_EFF_DA)
    grid = np.arange(36.5 - 21.9, 36.5, 1e-3) + 0.5e-3
    raw = np.mean(greens_value(45e-6, grid, medium, D_EFF_DA))
    assert h == pytest.approx(raw / PER_M3_PER_MOLAR, rel=1e-3)
    assert raw / (2 * PER_M3_PER_MOLAR) == pytest.approx(h / 2, rel=1e-3)


def test_memory_depth_clamps():
    fast_clear = Medium(alpha=0.2, lam=1.6, k_clear=50.0)
    assert isi_memory_depth(45e-6, 10.0, 6.0, fast_clear, D_EFF_DA) == 2
    no_clear = Medium(alpha=0.2, lam=1.6, k_clear=0.0)
    assert isi_memory_depth(45e-6, 5.0, 3.0, no_clear, D_EFF_DA) == 60


def test_memory_depth_baseline_vs_bruteforce(medium):
    t_s, w = 36.5, 21.9
    got = isi_memory_depth(45e-6, t_s, w, medium, D_EFF_DA)
    h = [window_coefficient(45e-6, t_s, w, k, medium, D_EFF_DA)
         for k in range(120)]
    tails = np.cumsum(h[::-1])[::-1]
    oracle = 60
    for k in range(2, 60):
        if tails[k] <= 1e-3 * h[0]:
            oracle = k
            break
    assert got == oracle


def test_window_coefficients_decreasing(medium):
    coeffs = window_coefficients(45e-6, 36.5, 21.9, medium, D_EFF_DA)
    vals = coeffs.values
    assert all(v >= 0 for v in vals)
    assert all(a > b for a, b in zip(vals[1:], vals[2:]))
    assert 2 <= coeffs.k_isi <= 60


def test_windowed_concentration(medium):
    coeffs = WindowCoefficients(r=45e-6, t_s=36.5, w=21.9,
                                values=(4e-16, 1e-16, 2e-17), k_isi=3)
    assert windowed_concentration([0, 0, 0], coeffs) == 0.0
    assert windowed_concentration([100.0], coeffs) == pytest.approx(4e-14)
    got = windowed_concentration([100.0, 50.0], coeffs)
    assert got == pytest.approx(100 * 4e-16 + 50 * 1e-16)
    # linearity in the counts
    a = windowed_concentration([3.0, 7.0, 11.0], coeffs)
    b = windowed_concentration([6.0, 14.0, 22.0], coeffs)
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_monotone_distance_decay(medium):
    r1, r2 = 30e-6, 60e-6
    t_post = (r2 * r2) / (6 * D_EFF_DA) * 1.5
    assert greens_value(r1, t_post, medium, D_EFF_DA) \
        > greens_value(r2, t_post, medium, D_EFF_DA)


def test_grid_curve_matches_burst(medium):
    dt = 0.01
    curve = grid_concentration_curve(45e-6, medium, D_EFF_DA, dt, 400, dt)
    # step j averages the burst response over [j dt, (j+1) dt)
    j = 176  # near the peak
    fine = np.linspace(j * dt, (j + 1) * dt, 101)
    vals = [burst_concentration(45e-6, t, 1.0, dt, medium, D_EFF_DA)
            for t in fine]
    assert curve[j] == pytest.approx(np.trapezoid(vals, fine) / dt, rel=2e-3)
    assert curve[0] >= 0.0 and np.all(np.isfinite(curve))
