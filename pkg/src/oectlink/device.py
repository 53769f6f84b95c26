"""OECT transduction and the correlated electrical noise model.

Noise has three components with one-sided current PSDs

    S_th = 4 k_B T / R_ch        (thermal, white, uncorrelated)
    S_1/f = K_f I_DC^2 / f       (flicker, shared across channels)
    S_drift = K_drift I_DC^2 / f^2

Two variance calculators coexist deliberately:

  * charge_variance_psd integrates S(f) |sin(pi f W)/(pi f)|^2 and is the
    formal PSD-based reference (thermal component -> S_th W / 2).
  * surrogate_variances are the detector normalizers that collapse the
    rectangular-window weighting into the factor W (thermal -> S_th W).

The synthesized traces are calibrated to the *surrogate* algebra: window-
integrated charges of one channel have variance S_th W + sigma_lf^2, and the
selective-minus-CTRL difference realizes 2 sigma_th^2 + 2 (1-rho) sigma_lf^2
exactly in expectation. In-band spectral shape (1/f, 1/f^2) and the rho
mixing are preserved; only the low-frequency level is scaled. This keeps the
simulated control-referencing benefit consistent with the crossover rule
rho* = (1 + th/lf) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Device, ScenarioError
from .constants import BOLTZMANN, ELEMENTARY_CHARGE

BAND_SAFEGUARD = 1e-9   # enforces f_max > f_min in degenerate windows


@dataclass(frozen=True)
class PsdComponents:
    thermal: float
    flicker: float
    drift: float

    @property
    def total(self) -> float:
        return self.thermal + self.flicker + self.drift


@dataclass(frozen=True)
class SurrogateVariances:
    """Band-limited detector normalizer variances (C^2) over one window."""

    thermal: float
    flicker: float
    drift: float
    rho: float
    f_min: float
    f_max: float

    @property
    def lf(self) -> float:
        return self.flicker + self.drift

    @property
    def single(self) -> float:
        return self.thermal + self.lf

    @property
    def referenced(self) -> float:
        return 2.0 * self.thermal + 2.0 * (1.0 - self.rho) * self.lf


@dataclass(frozen=True)
class NoiseTriplet:
    """Three current noise traces on the dt grid, ordered (DA, 5-HT, CTRL)."""

    traces: np.ndarray          # shape (3, n)
    band: tuple[float, float]   # (f_min, f_max) used for LF shaping
    dt: float

    def __post_init__(self):
        if self.traces.shape[0] != 3 or not np.all(np.isfinite(self.traces)):
            raise ValueError("traces must be three finite series")


def drain_current_signal(n_b: float, device: Device, q_eff: float) -> float:
    """Quasi-static small-signal drain current g_m q_eff e N_b / C_tot."""
    return device.g_m * q_eff * ELEMENTARY_CHARGE * n_b / device.c_tot


def thermal_psd(device: Device, temperature: float) -> float:
    return 4.0 * BOLTZMANN * temperature / device.r_ch


def noise_psd(f, device: Device, temperature: float) -> PsdComponents:
    """Single-sided current PSD components at frequency f > 0 (A^2/Hz)."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0.0):
        raise ScenarioError("f out of range")
    th = np.broadcast_to(thermal_psd(device, temperature), f.shape)
    i2 = device.i_dc ** 2
    flicker = device.k_f * i2 / f
    drift = device.k_drift * i2 / (f * f)
    if f.ndim == 0:
        return PsdComponents(float(th), float(flicker), float(drift))
    return PsdComponents(np.array(th), flicker, drift)


def detection_band(w: float, dt: float, device: Device) -> tuple[float, float]:
    """Shaping band: f_min from the window, f_max from bandwidth/Nyquist."""
    f_min = 1.0 / max(w, dt)
    f_max = min(device.b_det, 0.5 / dt)
    if f_max <= f_min:
        f_max = f_min * (1.0 + BAND_SAFEGUARD)
    return f_min, f_max


def surrogate_variances(w: float, dt: float, device: Device,
                        temperature: float, rho: float) -> SurrogateVariances:
    """Closed-form normalizer variances over a window of length w."""
    if w <= 0.0 or dt <= 0.0:
        raise ScenarioError("window out of range")
    f_min, f_max = detection_band(w, dt, device)
    i2 = device.i_dc ** 2
    return SurrogateVariances(
        thermal=thermal_psd(device, temperature) * w,
        flicker=device.k_f * i2 * math.log(f_max / f_min) * w,
        drift=device.k_drift * i2 * (1.0 / f_min - 1.0 / f_max) * w,
        rho=rho, f_min=f_min, f_max=f_max)


def control_benefit_crossover(w: float, dt: float, device: Device,
                              temperature: float) -> float:
    """Correlation above which control referencing lowers the amplitude
    noise: rho* = (1 + th/lf) / 2."""
    sv = surrogate_variances(w, dt, device, temperature, rho=0.0)
    if sv.lf <= 0.0:
        raise ScenarioError("low-frequency variance is zero; crossover undefined")
    return 0.5 * (1.0 + sv.thermal / sv.lf)


# ---------------------------------------------------------------------------
# PSD-based reference variance (quadrature oracle)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _window_weighted_integral(psd, w: float, lo: float, hi: float) -> float:
    """integral of psd(f) * (sin(pi f w)/(pi f))^2 over [lo, hi], evaluated
    piecewise between the zeros of the window transfer function."""
    if hi <= lo:
        return 0.0
    zeros = np.arange(math.floor(lo * w) + 1, math.ceil(hi * w)) / w
    edges = np.concatenate(([lo], zeros[(zeros > lo) & (zeros < hi)], [hi]))
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    f = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    kern = np.square(np.sin(math.pi * f * w) / (math.pi * f))
    vals = psd(f) * kern
    return float(np.sum((vals @ _GL_WEIGHTS) * half))


def charge_variance_psd(w: float, device: Device, temperature: float,
                        f_max: float | None = None) -> PsdComponents:
    """Integrated-charge variance per component from the PSDs and the
    rectangular-window transfer function (C^2).

    The thermal component integrates from f=0 and approaches the analytic
    one-sided result S_th W / 2 as f_max grows; the flicker and drift
    components integrate from the detector band edge f_min = 1/w because
    their PSD integrals diverge at f=0. Note the deliberate factor-2 gap
    between this thermal reference and the surrogate normalizer S_th W.
    """
    if w <= 0.0:
        raise ScenarioError("window out of range")
    if f_max is None:
        f_max = device.b_det
    i2 = device.i_dc ** 2
    s_th = thermal_psd(device, temperature)
    f_min = 1.0 / w
    thermal = _window_weighted_integral(
        lambda f: np.full_like(f, s_th), w, 0.0, f_max)
    flicker = _window_weighted_integral(
        lambda f: device.k_f * i2 / f, w, f_min, f_max)
    drift = _window_weighted_integral(
        lambda f: device.k_drift * i2 / (f * f), w, f_min, f_max)
    return PsdComponents(thermal, flicker, drift)


# ---------------------------------------------------------------------------
# Correlated triplet synthesis


def _lf_spectrum(n: int, dt: float, device: Device, f_min: float,
                 f_max: float, flicker: bool, drift: bool):
    """Frequency bins, target amplitudes, and the calibration scale for one
    shaped low-frequency trace of n samples (FFT length 2n)."""
    n_fft = 2 * n
    freqs = np.fft.rfftfreq(n_fft, dt)
    band = (freqs >= f_min) & (freqs <= f_max)
    band[0] = False       # zero DC bin
    band[-1] = False      # drop the Nyquist bin
    f = freqs[band]
    i2 = device.i_dc ** 2
    psd = np.zeros_like(f)
    if flicker:
        psd += device.k_f * i2 / f
    if drift:
        psd += device.k_drift * i2 / (f * f)
    df = 1.0 / (n_fft * dt)
    amp = 0.5 * n_fft * np.sqrt(psd * df)

    # Natural variance of the window charge dt * sum(x[:n]) given complex
    # Gaussian bins, via the partial geometric sums R_k of the first n
    # samples; then rescale so the window charge realizes the surrogate
    # low-frequency variance exactly in expectation.
    # |R_k|^2 = sin^2(pi k/2) / sin^2(pi k/(2n)): zero for even k.
    k = np.nonzero(band)[0]
    r_sq = np.where(k % 2 == 1,
                    1.0 / np.square(np.sin(0.5 * math.pi * k / n)), 0.0)
    natural = (4.0 * dt * dt / (n_fft * n_fft)) * np.sum(amp * amp * r_sq)
    w = n * dt
    target = 0.0
    if flicker:
        target += device.k_f * i2 * math.log(f_max / f_min) * w
    if drift:
        target += device.k_drift * i2 * (1.0 / f_min - 1.0 / f_max) * w
    scale = math.sqrt(target / natural) if natural > 0.0 else 0.0
    return band, amp * scale


def _shaped_trace(rng: np.random.Generator, n: int, band, amp) -> np.ndarray:
    n_fft = 2 * n
    spectrum = np.zeros(n + 1, dtype=complex)
    z = rng.standard_normal(2 * int(band.sum()))
    spectrum[band] = amp * (z[0::2] + 1j * z[1::2])
    return np.fft.irfft(spectrum, n_fft)[:n]


def synthesize_noise_triplet(duration: float, dt: float, device: Device,
                             temperature: float, rho: float,
                             rng: np.random.Generator, *,
                             thermal: bool = True, flicker: bool = True,
                             drift: bool = True) -> NoiseTriplet:
    """Correlated tri-channel noise traces over one decision window.

    Low-frequency (flicker+drift) traces are built in the frequency domain
    (independent complex Gaussian bins over [f_min, f_max], Hermitian
    symmetry, zero DC) and mixed per channel as
    sqrt(rho)*shared + sqrt(1-rho)*own, so every channel pair has
    pre-subtraction LF correlation rho. Thermal noise is white and
    independent per channel with per-sample variance S_th/dt (window charge
    variance S_th * duration, the surrogate convention).

    Draw order on the stream: shared LF bins, then own LF bins (DA, 5-HT,
    CTRL), then thermal samples (DA, 5-HT, CTRL).
    """
    if duration < dt:
        raise ScenarioError("duration shorter than one step")
    if not (0.0 <= rho <= 1.0):
        raise ScenarioError("rho out of range")
    n = int(round(duration / dt))
    f_min, f_max = detection_band(n * dt, dt, device)

    lf = np.zeros((3, n))
    if flicker or drift:
        band, amp = _lf_spectrum(n, dt, device, f_min, f_max, flicker, drift)
        shared = _shaped_trace(rng, n, band, amp)
        own = [_shaped_trace(rng, n, band, amp) for _ in range(3)]
        a, b = math.sqrt(rho), math.sqrt(1.0 - rho)
        for ch in range(3):
            lf[ch] = a * shared + b * own[ch]

    traces = lf
    if thermal:
        sigma = math.sqrt(thermal_psd(device, temperature) / dt)
        for ch in range(3):
            traces[ch] += sigma * rng.standard_normal(n)
    return NoiseTriplet(traces=traces, band=(f_min, f_max), dt=dt)
