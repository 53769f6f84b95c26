"""Decision statistics, threshold calibration, and symbol detection.

All statistics live in a variance-normalized (z-score) domain scaled by the
surrogate normalizers, so thresholds are dimensionless and comparable
across operating points. Comparator directions follow the sign of the
species' effective charge: for the DA axis (q_eff < 0) a larger amplitude
means a more negative charge, so amplitude binning happens on the directed
statistic sign(q_eff) * Gamma.

Calibration runs single-symbol simulations per class with ISI disabled,
fits one Gaussian per class, and places each adjacent-pair threshold at the
equal-likelihood point. Empirical class statistics place boundaries only;
the statistic normalizers always come from the surrogate variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Scenario, ScenarioError, Scheme, Species
from .engine import SELECTIVE, SymbolEngine
from .streams import RngBundle

class CalibrationError(RuntimeError):
    """Calibration produced a degenerate class or unusable thresholds."""


@dataclass(frozen=True)
class ChargeTriple:
    """Window-integrated charges (C) on the three channels."""

    q_da: float
    q_fht: float
    q_ctrl: float


@dataclass
class ClassStat:
    mean: float
    std: float


@dataclass
class DetectorCalibration:
    """Per-scheme thresholds, normalizers, and comparator directions.

    Thresholds are stored in the directed z-score domain and are strictly
    increasing: three level thresholds for CSK-4, one identity threshold
    for MoSK/Hybrid, and one amplitude threshold per Hybrid species branch.
    """

    scheme: Scheme
    ctrl_enabled: bool
    sigma_delta: float
    sigma_t: float
    sigma_o: float
    rho_cc: float
    signs: dict[Species, float]
    target: Species = Species.DA
    mosk_threshold: float | None = None
    amp_thresholds: dict[Species, float] = field(default_factory=dict)
    level_thresholds: tuple[float, ...] = ()
    class_stats: tuple[ClassStat, ...] = ()

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "ctrl_enabled": self.ctrl_enabled,
            "sigma_delta": self.sigma_delta,
            "sigma_t": self.sigma_t,
            "sigma_o": self.sigma_o,
            "rho_cc": self.rho_cc,
            "signs": {sp.value: s for sp, s in self.signs.items()},
            "target": self.target.value,
            "mosk_threshold": self.mosk_threshold,
            "amp_thresholds": {sp.value: t
                               for sp, t in self.amp_thresholds.items()},
            "level_thresholds": list(self.level_thresholds),
            "class_stats": [[c.mean, c.std] for c in self.class_stats],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorCalibration":
        by_label = {sp.value: sp for sp in Species}
        return cls(
            scheme=Scheme(data["scheme"]),
            ctrl_enabled=data["ctrl_enabled"],
            sigma_delta=data["sigma_delta"],
            sigma_t=data["sigma_t"],
            sigma_o=data["sigma_o"],
            rho_cc=data["rho_cc"],
            signs={by_label[k]: v for k, v in data["signs"].items()},
            target=by_label[data["target"]],
            mosk_threshold=data["mosk_threshold"],
            amp_thresholds={by_label[k]: v
                            for k, v in data["amp_thresholds"].items()},
            level_thresholds=tuple(data["level_thresholds"]),
            class_stats=tuple(ClassStat(m, s)
                              for m, s in data["class_stats"]),
        )


# ---------------------------------------------------------------------------
# Charge statistics


def integrate_charge(trace, t_s: float, w: float, dt: float) -> float:
    """Left-Riemann charge over the tail window [T_s - W, T_s)."""
    n_need = int(round(t_s / dt))
    w_steps = int(round(w / dt))
    if len(trace) < n_need:
        raise ScenarioError("trace shorter than the symbol period")
    window = np.asarray(trace[n_need - w_steps:n_need])
    return float(np.sum(window) * dt)


def control_reference(q: float, q_ctrl: float) -> float:
    """Control-referenced charge q - q_CTRL."""
    return q - q_ctrl


def _referenced(triple: ChargeTriple, cal: DetectorCalibration,
                species: Species) -> float:
    q = triple.q_da if species is Species.DA else triple.q_fht
    return control_reference(q, triple.q_ctrl) if cal.ctrl_enabled else q


def mosk_statistic(triple: ChargeTriple, cal: DetectorCalibration) -> float:
    """Sign-aware differential contrast; positive favors DA. MoSK never
    uses control subtraction."""
    return (cal.signs[Species.DA] * triple.q_da
            - cal.signs[Species.FHT] * triple.q_fht) / cal.sigma_delta


def csk_statistic(triple: ChargeTriple, cal: DetectorCalibration) -> float:
    """Dual-channel variance-normalized contrast
    q_t/sigma_t - rho_cc q_o/sigma_o (the equal-covariance Gaussian
    discriminant for a target-axis mean shift)."""
    other = Species.FHT if cal.target is Species.DA else Species.DA
    q_t = _referenced(triple, cal, cal.target)
    q_o = _referenced(triple, cal, other)
    return q_t / cal.sigma_t - cal.rho_cc * q_o / cal.sigma_o


def hybrid_statistic(triple: ChargeTriple, species_hat: Species,
                     cal: DetectorCalibration) -> float:
    """Single-axis amplitude statistic on the MoSK-selected species."""
    if species_hat not in SELECTIVE:
        raise ScenarioError("species_hat must be selective")
    return _referenced(triple, cal, species_hat) / cal.sigma_t


# ---------------------------------------------------------------------------
# Calibration


def ml_boundary(mu0: float, s0: float, mu1: float, s1: float) -> float:
    """Equal-likelihood point between two Gaussian classes.

    Solves the log-likelihood quadratic and keeps the root strictly between
    the class means; degenerate fits fall back to the variance-weighted
    midpoint (mu0 s1 + mu1 s0) / (s0 + s1).
    """
    if s0 <= 0.0 or s1 <= 0.0:
        raise CalibrationError("class standard deviation must be positive")
    lo, hi = min(mu0, mu1), max(mu0, mu1)
    if math.isclose(s0, s1, rel_tol=1e-12):
        return 0.5 * (mu0 + mu1)
    a = 1.0 / (s0 * s0) - 1.0 / (s1 * s1)
    b = -2.0 * (mu0 / (s0 * s0) - mu1 / (s1 * s1))
    c = (mu0 * mu0) / (s0 * s0) - (mu1 * mu1) / (s1 * s1) \
        + 2.0 * math.log(s0 / s1)
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        # cancellation-safe quadratic roots (a is tiny for s0 ~ s1)
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        candidates = [x for x in (q / a if a != 0.0 else math.inf,
                                  c / q if q != 0.0 else math.inf)
                      if lo < x < hi]
        if candidates:
            # with two admissible crossings keep the class-ordering one,
            # nearest the variance-weighted midpoint
            anchor = (mu0 * s1 + mu1 * s0) / (s0 + s1)
            return min(candidates, key=lambda x: abs(x - anchor))
    return (mu0 * s1 + mu1 * s0) / (s0 + s1)


def _fit(samples: np.ndarray, label: str) -> ClassStat:
    std = float(np.std(samples, ddof=1))
    if std <= 0.0:
        raise CalibrationError(f"degenerate class {label}: zero variance")
    return ClassStat(mean=float(np.mean(samples)), std=std)


def _base_calibration(engine: SymbolEngine) -> DetectorCalibration:
    sv = engine.surrogate
    sigma = engine.sigma_referenced if engine.ctrl else engine.sigma_single
    return DetectorCalibration(
        scheme=engine.scheme,
        ctrl_enabled=engine.ctrl,
        sigma_delta=math.sqrt(sv.referenced),
        sigma_t=sigma,
        sigma_o=sigma,
        rho_cc=engine.scenario.noise.rho_cc,
        signs=dict(engine.signs),
        target=engine.scenario.modulation.csk_axis,
    )


def calibrate(scenario: Scenario, scheme: Scheme, n_m: float, r: float,
              bundle: RngBundle, *, ctrl: bool | None = None,
              ts_override: float | None = None, diffusion_scale: float = 1.0,
              n_cal: int | None = None) -> DetectorCalibration:
    """Maximum-likelihood thresholds at one operating point.

    Runs n_cal single-symbol simulations per symbol class with ISI
    disabled, in class order on the provided streams.
    """
    engine = SymbolEngine(scenario, scheme, n_m, r=r, ctrl=ctrl, isi=False,
                          ts_override=ts_override,
                          diffusion_scale=diffusion_scale)
    if n_cal is None:
        n_cal = scenario.montecarlo.cal_symbols_per_class
    cal = _base_calibration(engine)

    class_q = []
    for cls in range(engine.alphabet_size):
        indices = np.full(n_cal, cls, dtype=np.int64)
        class_q.append(engine.charge_triples(indices, bundle))

    if scheme is Scheme.MOSK:
        stats = [_fit(_mosk_batch(q, cal), f"MoSK/{i}")
                 for i, q in enumerate(class_q)]
        # DA class sits on the positive side: boundary between 5-HT and DA.
        cal.mosk_threshold = ml_boundary(stats[1].mean, stats[1].std,
                                         stats[0].mean, stats[0].std)
        cal.class_stats = tuple(stats)
        return cal

    if scheme is Scheme.CSK4:
        sign = cal.signs[cal.target]
        stats = [_fit(sign * _csk_batch(q, cal), f"CSK4/{i}")
                 for i, q in enumerate(class_q)]
        thresholds = [ml_boundary(stats[i].mean, stats[i].std,
                                  stats[i + 1].mean, stats[i + 1].std)
                      for i in range(3)]
        if not all(a < b for a, b in zip(thresholds, thresholds[1:])):
            raise CalibrationError("level thresholds are not increasing")
        cal.level_thresholds = tuple(thresholds)
        cal.class_stats = tuple(stats)
        return cal

    # Hybrid: identity boundary from species-pooled MoSK statistics, then
    # one directed amplitude threshold per species branch.
    gamma = [_mosk_batch(q, cal) for q in class_q]
    da_pool = _fit(np.concatenate([gamma[0], gamma[1]]), "Hybrid/DA")
    fht_pool = _fit(np.concatenate([gamma[2], gamma[3]]), "Hybrid/5HT")
    cal.mosk_threshold = ml_boundary(fht_pool.mean, fht_pool.std,
                                     da_pool.mean, da_pool.std)
    stats = []
    for branch, sp in enumerate(SELECTIVE):
        sign = cal.signs[sp]
        low = _fit(sign * _amp_batch(class_q[2 * branch], sp, cal),
                   f"Hybrid/{sp.value}/low")
        high = _fit(sign * _amp_batch(class_q[2 * branch + 1], sp, cal),
                    f"Hybrid/{sp.value}/high")
        cal.amp_thresholds[sp] = ml_boundary(low.mean, low.std,
                                             high.mean, high.std)
        stats.extend([low, high])
    cal.class_stats = tuple(stats)
    return cal


# ---------------------------------------------------------------------------
# Detection

def detect(scheme: Scheme, triple: ChargeTriple,
           cal: DetectorCalibration) -> int:
    """Decide one symbol index from a charge triple."""
    if scheme is Scheme.MOSK:
        return 0 if mosk_statistic(triple, cal) > cal.mosk_threshold else 1
    if scheme is Scheme.CSK4:
        d = cal.signs[cal.target] * csk_statistic(triple, cal)
        return int(np.searchsorted(cal.level_thresholds, d))
    if scheme is Scheme.HYBRID:
        species = Species.DA if mosk_statistic(triple, cal) \
            > cal.mosk_threshold else Species.FHT
        d = cal.signs[species] * hybrid_statistic(triple, species, cal)
        amp = 1 if d > cal.amp_thresholds[species] else 0
        return (0 if species is Species.DA else 2) + amp
    raise ScenarioError(f"unknown scheme {scheme!r}")


# Batch variants operating on charge arrays (hot path).

def _ref_batch(q, cal: DetectorCalibration, species: Species) -> np.ndarray:
    q_da, q_fht, q_ctrl = q
    sel = q_da if species is Species.DA else q_fht
    return sel - q_ctrl if cal.ctrl_enabled else sel


def _mosk_batch(q, cal: DetectorCalibration) -> np.ndarray:
    q_da, q_fht, _ = q
    return (cal.signs[Species.DA] * q_da
            - cal.signs[Species.FHT] * q_fht) / cal.sigma_delta


def _csk_batch(q, cal: DetectorCalibration) -> np.ndarray:
    other = Species.FHT if cal.target is Species.DA else Species.DA
    return (_ref_batch(q, cal, cal.target) / cal.sigma_t
            - cal.rho_cc * _ref_batch(q, cal, other) / cal.sigma_o)


def _amp_batch(q, species: Species, cal: DetectorCalibration) -> np.ndarray:
    return _ref_batch(q, cal, species) / cal.sigma_t


def detect_batch(scheme: Scheme, q, cal: DetectorCalibration) -> np.ndarray:
    """Vectorized detect over (q_da, q_fht, q_ctrl) arrays."""
    if scheme is Scheme.MOSK:
        return np.where(_mosk_batch(q, cal) > cal.mosk_threshold, 0, 1)
    if scheme is Scheme.CSK4:
        d = cal.signs[cal.target] * _csk_batch(q, cal)
        return np.searchsorted(cal.level_thresholds, d).astype(np.int64)
    if scheme is Scheme.HYBRID:
        is_da = _mosk_batch(q, cal) > cal.mosk_threshold
        out = np.empty(len(is_da), dtype=np.int64)
        for sp, mask, base in ((Species.DA, is_da, 0),
                               (Species.FHT, ~is_da, 2)):
            d = cal.signs[sp] * _amp_batch(q, sp, cal)
            out[mask] = base + (d[mask] > cal.amp_thresholds[sp])
        return out
    raise ScenarioError(f"unknown scheme {scheme!r}")
