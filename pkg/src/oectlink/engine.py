"""Per-operating-point simulation engine (internal plumbing).

Precomputes everything that is fixed at an operating point -- symbol period,
decision window, per-molecule concentration curves, binding kinetics, OECT
gains, and the surrogate noise sigmas -- and then maps batches of symbol
indices to window-integrated charge triples.

Noise enters decisions only through the window-integrated charges, and the
synthesized traces are calibrated so those integrals are exactly Gaussian
with the surrogate variances (see device.synthesize_noise_triplet). The hot
path therefore samples the charge noise directly from that distribution:
per symbol, thermal DA/5-HT/CTRL ~ N(0, th) independently, plus mixed
low-frequency terms sqrt(rho)*shared + sqrt(1-rho)*own with shared and own
~ N(0, lf). This is draw-level equivalent to integrating freshly
synthesized traces over the decision window, without the per-symbol FFTs.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .config import (Scenario, Scheme, Species, alphabet_levels,
                     effective_diffusivity)
from .constants import ELEMENTARY_CHARGE
from .device import surrogate_variances
from .framing import decision_window, draw_emissions, symbol_period
from .streams import RngBundle
from .transport import grid_concentration_curve, isi_memory_depth

SELECTIVE = (Species.DA, Species.FHT)


class SymbolEngine:
    def __init__(self, scenario: Scenario, scheme: Scheme, n_m: float,
                 r: float | None = None, ctrl: bool | None = None,
                 isi: bool | None = None, ts_override: float | None = None,
                 diffusion_scale: float = 1.0):
        mod = scenario.modulation
        timing = scenario.timing
        medium = scenario.medium
        self.scenario = scenario
        self.scheme = scheme
        self.n_m = float(n_m)
        self.r = medium.r if r is None else float(r)
        self.ctrl = mod.ctrl if ctrl is None else bool(ctrl)
        self.isi = scenario.montecarlo.isi if isi is None else bool(isi)
        self.dt = timing.dt

        # The symbol-period policy always uses unscaled diffusivities: the
        # diffusion-scale sweep perturbs transport under a fixed
        # timing/window calibration.
        if ts_override is None:
            self.t_s = symbol_period(self.r, timing, medium,
                                     scenario.selective_channels)
        else:
            self.t_s = float(ts_override)
        self.w = decision_window(self.t_s, timing.eta, timing.dt)
        self.n_steps = int(round(self.t_s / self.dt))
        self.w_steps = int(round(self.w / self.dt))

        self.levels = alphabet_levels(scheme, self.n_m, mod.csk_axis)
        self.alphabet_size = len(self.levels)
        self.level_means = np.array([lvl for _, lvl in self.levels])
        self.level_species = [sp for sp, _ in self.levels]

        # Transport curves and binding parameters per selective species. An
        # explicit operating-point r overrides the per-channel separations.
        geometry = {}
        for sp in SELECTIVE:
            ch = scenario.channel(sp)
            d_eff = effective_diffusivity(ch.d_aq * diffusion_scale,
                                          medium.lam)
            geometry[sp] = (self.r if r is not None else ch.r, d_eff)

        self.k_isi = 1
        if self.isi:
            self.k_isi = max(isi_memory_depth(r_sp, self.t_s, self.w,
                                              medium, d_eff)
                             for r_sp, d_eff in geometry.values())

        self.kin: dict[Species, tuple[float, float, float, int]] = {}
        self.curves: dict[Species, np.ndarray] = {}
        n_curve = self.n_steps * self.k_isi
        for sp in SELECTIVE:
            ch = scenario.channel(sp)
            r_sp, d_eff = geometry[sp]
            self.curves[sp] = grid_concentration_curve(
                r_sp, medium, d_eff, self.dt, n_curve, timing.t_rel)
            kon_dt = ch.k_on_eff * self.dt
            koff_dt = ch.k_off * self.dt
            p_off = -math.expm1(-koff_dt)
            self.kin[sp] = (kon_dt, koff_dt, p_off, ch.n_apt)

        # OECT gain per species: charge per (occupancy * dt).
        dev = scenario.device
        self.gains = {
            sp: dev.g_m * scenario.channel(sp).q_eff * ELEMENTARY_CHARGE
            / dev.c_tot
            for sp in SELECTIVE}
        self.signs = {sp: math.copysign(1.0, scenario.channel(sp).q_eff)
                      for sp in SELECTIVE}

        # Surrogate normalizers at this window.
        nz = scenario.noise
        self.surrogate = surrogate_variances(self.w, self.dt, dev,
                                             medium.temperature, nz.rho)
        self.sigma_single = math.sqrt(self.surrogate.single)
        self.sigma_referenced = math.sqrt(self.surrogate.referenced)
        self.sigma_delta = math.sqrt(self.surrogate.referenced)
        self.noise_enabled = nz.enabled
        self._s_th = math.sqrt(self.surrogate.thermal)
        self._s_lf = math.sqrt(self.surrogate.lf)
        self._rho = nz.rho

    # -- symbol generation -------------------------------------------------

    def draw_symbols(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.alphabet_size, size=n)

    def emission_counts(self, indices: np.ndarray,
                        rng: np.random.Generator,
                        ) -> dict[Species, np.ndarray]:
        """Realized molecule counts per selective species (zero for symbols
        carried by the other species)."""
        means = self.level_means[indices]
        if self.scenario.montecarlo.shot_noise:
            realized = draw_emissions(means, rng).astype(float)
        else:
            realized = means.astype(float)
        counts = {}
        species_idx = np.array([SELECTIVE.index(sp)
                                for sp in self.level_species])[indices]
        for pos, sp in enumerate(SELECTIVE):
            counts[sp] = np.where(species_idx == pos, realized, 0.0)
        return counts

    # -- binding + transduction --------------------------------------------

    def _window_sums(self, counts: dict[Species, np.ndarray],
                     rng: np.random.Generator) -> dict[Species, np.ndarray]:
        """Window-summed occupancy per species for a batch of symbols.

        No-ISI mode runs each symbol independently from zero occupancy in
        channel-major order (all DA symbols, then all 5-HT). ISI mode walks
        the sequence symbol-major, superposing the last K_ISI emission
        tails and carrying occupancy across boundaries.
        """
        stochastic = self.scenario.montecarlo.stochastic_binding
        sums: dict[Species, np.ndarray] = {}
        if not self.isi:
            for sp in SELECTIVE:
                kon_dt, koff_dt, p_off, n_apt = self.kin[sp]
                if stochastic:
                    sums[sp] = _kernels.occupancy_window_sums(
                        self.curves[sp], counts[sp], self.n_steps,
                        self.w_steps, kon_dt, p_off, n_apt, rng)
                else:
                    sums[sp] = _kernels.mean_occupancy_window_sums(
                        self.curves[sp], counts[sp], self.n_steps,
                        self.w_steps, kon_dt, koff_dt, n_apt)
            return sums

        n = len(next(iter(counts.values())))
        k_isi = self.k_isi
        for sp in SELECTIVE:
            kon_dt, koff_dt, p_off, n_apt = self.kin[sp]
            curve = self.curves[sp].reshape(k_isi, self.n_steps)
            hist = np.zeros(k_isi)
            out = np.empty(n)
            nb = 0
            for i in range(n):
                hist[1:] = hist[:-1]
                hist[0] = counts[sp][i]
                conc = hist @ curve
                if stochastic:
                    out[i], nb = _kernels.occupancy_symbol(
                        conc, self.w_steps, kon_dt, p_off, n_apt, nb, rng)
                else:
                    out[i], nb = _kernels.mean_occupancy_symbol(
                        conc, self.w_steps, kon_dt, koff_dt, n_apt, nb)
            sums[sp] = out
        return sums

    def _noise_charges(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Window-integrated noise charges, shape (n, 3) for (DA, 5HT, CTRL).

        Columns of the standard-normal block: shared LF, own LF x3,
        thermal x3 (fixed order; see module docstring for the equivalence
        with trace-level synthesis).
        """
        if not self.noise_enabled:
            return np.zeros((n, 3))
        z = rng.standard_normal((n, 7))
        shared = self._s_lf * z[:, 0]
        own = self._s_lf * z[:, 1:4]
        th = self._s_th * z[:, 4:7]
        a, b = math.sqrt(self._rho), math.sqrt(1.0 - self._rho)
        return th + a * shared[:, None] + b * own

    def charge_triples(self, indices: np.ndarray, bundle: RngBundle,
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Simulate one batch: returns window charges (q_DA, q_5HT, q_CTRL)."""
        counts = self.emission_counts(indices, bundle.emission)
        sums = self._window_sums(counts, bundle.binding)
        noise = self._noise_charges(len(indices), bundle.noise)
        q_da = self.gains[Species.DA] * sums[Species.DA] * self.dt \
            + noise[:, 0]
        q_fht = self.gains[Species.FHT] * sums[Species.FHT] * self.dt \
            + noise[:, 1]
        q_ctrl = noise[:, 2]
        return q_da, q_fht, q_ctrl

    # -- deterministic means for analytic bracketing ------------------------

    def mean_charges(self, index: int) -> tuple[float, float, float]:
        """Noise-free mean charge triple for one symbol class (mean
        emission, mean-field binding, no ISI)."""
        sp_tx, level = self.levels[index]
        out = {}
        for sp in SELECTIVE:
            kon_dt, koff_dt, _, n_apt = self.kin[sp]
            count = level if sp is sp_tx else 0.0
            total, _ = _kernels.mean_occupancy_symbol(
                count * self.curves[sp][:self.n_steps], self.w_steps,
                kon_dt, koff_dt, n_apt, 0.0)
            out[sp] = self.gains[sp] * total * self.dt
        return out[Species.DA], out[Species.FHT], 0.0
