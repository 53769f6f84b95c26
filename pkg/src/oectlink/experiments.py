"""End-to-end experiments: sequence simulation, confidence-controlled SER
estimation, Gaussian LoD bracketing, Monte Carlo LoD search, and sweeps.

Seed schedule: 2000-symbol sequences per Monte Carlo seed, at least 8
seeds, adding seeds until the pooled Wilson 95% half-width is at most
4e-3 or 50 seeds are reached. Seeds run concurrently; the stop decision
consumes results in seed order, so outcomes are scheduler-independent.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import (Scenario, Scheme, Species, loads_scenario,
                     dump_scenario, scenario_hash)
from .detection import DetectorCalibration, calibrate, detect_batch
from .engine import SymbolEngine
from .results import ResultRow
from .streams import CALIBRATION_SEED_INDEX, RngBundle, point_token

WILSON_Z95 = 1.96
LOD_MAX_NM = 1e9


class LodSearchError(RuntimeError):
    """LoD search could not bracket or converge on the target SER."""


@dataclass(frozen=True)
class SequenceResult:
    errors: int
    identity_errors: int
    amplitude_errors: int


@dataclass
class SerEstimate:
    errors: int
    symbols: int
    ser: float
    wilson_lo: float
    wilson_hi: float
    seeds_used: int
    identity_errors: int = 0
    amplitude_errors: int = 0

    @property
    def half_width(self) -> float:
        return 0.5 * (self.wilson_hi - self.wilson_lo)


@dataclass
class LodResult:
    r: float
    scheme: Scheme
    ctrl_enabled: bool
    lod: int
    trace: list[tuple[int, SerEstimate]] = field(default_factory=list)


def wilson_interval(k: int, n: int, z: float = WILSON_Z95,
                    ) -> tuple[float, float]:
    """Wilson score interval for k errors in n symbols."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= k <= n:
        raise ValueError("k must be in [0, n]")
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    margin = (z / denom) * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    return max(0.0, center - margin), min(1.0, center + margin)


def gaussian_ser(mu0: float, mu1: float, sigma: float) -> float:
    """Equal-variance binary error probability
    0.5 erfc(|mu1 - mu0| / (2 sqrt(2) sigma))."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    return 0.5 * math.erfc(abs(mu1 - mu0) / (2.0 * math.sqrt(2.0) * sigma))


# ---------------------------------------------------------------------------
# Sequence simulation


def _decompose(scheme: Scheme, tx: np.ndarray, rx: np.ndarray,
               ) -> SequenceResult:
    errors = int(np.sum(rx != tx))
    if scheme is Scheme.HYBRID:
        sp_tx, sp_rx = tx // 2, rx // 2
        identity = int(np.sum(sp_rx != sp_tx))
        amplitude = int(np.sum((sp_rx == sp_tx) & (rx != tx)))
    elif scheme is Scheme.MOSK:
        identity, amplitude = errors, 0
    else:
        identity, amplitude = 0, errors
    return SequenceResult(errors, identity, amplitude)


def simulate_sequence(scenario: Scenario, scheme: Scheme, n_m: float,
                      r: float, n_symbols: int, isi_enabled: bool,
                      cal: DetectorCalibration, bundle: RngBundle, *,
                      ctrl: bool | None = None,
                      ts_override: float | None = None,
                      diffusion_scale: float = 1.0,
                      engine: SymbolEngine | None = None) -> SequenceResult:
    """Simulate one i.i.d. uniform symbol sequence through release,
    transport, binding, transduction, noise, and detection."""
    if engine is None:
        engine = SymbolEngine(scenario, scheme, n_m, r=r, ctrl=ctrl,
                              isi=isi_enabled, ts_override=ts_override,
                              diffusion_scale=diffusion_scale)
    tx = engine.draw_symbols(n_symbols, bundle.symbols)
    q = engine.charge_triples(tx, bundle)
    rx = detect_batch(scheme, q, cal)
    return _decompose(scheme, tx, rx)


# ---------------------------------------------------------------------------
# Parallel seed execution

_SCENARIO_CACHE: dict[str, Scenario] = {}
_ENGINE_CACHE: dict[tuple, SymbolEngine] = {}


def _cached_scenario(text: str) -> Scenario:
    scn = _SCENARIO_CACHE.get(text)
    if scn is None:
        scn = loads_scenario(text)
        _SCENARIO_CACHE[text] = scn
    return scn


def _cached_engine(text: str, scheme: Scheme, n_m: float, r: float,
                   ctrl: bool, isi: bool, ts_override: float | None,
                   diffusion_scale: float) -> SymbolEngine:
    key = (text, scheme, n_m, r, ctrl, isi, ts_override, diffusion_scale)
    eng = _ENGINE_CACHE.get(key)
    if eng is None:
        if len(_ENGINE_CACHE) > 8:
            _ENGINE_CACHE.clear()
        eng = SymbolEngine(_cached_scenario(text), scheme, n_m, r=r,
                           ctrl=ctrl, isi=isi, ts_override=ts_override,
                           diffusion_scale=diffusion_scale)
        _ENGINE_CACHE[key] = eng
    return eng


def _run_seed(task: tuple) -> tuple[int, int, int, int]:
    (text, scheme_value, n_m, r, ctrl, isi, ts_override, diffusion_scale,
     master_seed, point, seed_index, cal_data, n_symbols) = task
    scheme = Scheme(scheme_value)
    engine = _cached_engine(text, scheme, n_m, r, ctrl, isi, ts_override,
                            diffusion_scale)
    cal = DetectorCalibration.from_dict(cal_data)
    bundle = RngBundle.derive(master_seed, point, seed_index)
    res = simulate_sequence(engine.scenario, scheme, n_m, r, n_symbols,
                            isi, cal, bundle, engine=engine)
    return (seed_index, res.errors, res.identity_errors,
            res.amplitude_errors)


def worker_count() -> int:
    env = os.environ.get("OECTLINK_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class _SeedRunner:
    """Runs seed tasks inline or on a process pool."""

    def __init__(self, workers: int | None = None):
        self.workers = worker_count() if workers is None else workers
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()

    def run(self, tasks: list[tuple]) -> list[tuple]:
        if self._pool is None:
            return [_run_seed(t) for t in tasks]
        return list(self._pool.map(_run_seed, tasks))


# ---------------------------------------------------------------------------
# SER estimation


def estimate_ser(scenario: Scenario, scheme: Scheme, n_m: float, r: float,
                 isi_enabled: bool, master_seed: int, *,
                 ctrl: bool | None = None, ts_override: float | None = None,
                 diffusion_scale: float = 1.0,
                 cal: DetectorCalibration | None = None,
                 runner: _SeedRunner | None = None) -> SerEstimate:
    """Confidence-controlled SER at one operating point.

    Calibration happens once per operating point with ISI disabled, on a
    reserved calibration stream; evaluation seeds then pool errors until
    the Wilson stop rule fires.
    """
    ctrl = scenario.modulation.ctrl if ctrl is None else ctrl
    mc = scenario.montecarlo
    text = dump_scenario(scenario)
    point = point_token(scenario_hash(scenario), scheme.value, ctrl, n_m, r,
                        isi_enabled, ts_override, diffusion_scale)
    if cal is None:
        cal_bundle = RngBundle.derive(master_seed, point,
                                      CALIBRATION_SEED_INDEX)
        cal = calibrate(scenario, scheme, n_m, r, cal_bundle, ctrl=ctrl,
                        ts_override=ts_override,
                        diffusion_scale=diffusion_scale)
    cal_data = cal.to_dict()

    def task(seed_index: int) -> tuple:
        return (text, scheme.value, n_m, r, ctrl, isi_enabled, ts_override,
                diffusion_scale, master_seed, point, seed_index, cal_data,
                mc.symbols_per_seed)

    errors = identity = amplitude = 0
    seeds_done = 0
    estimate = None

    def pooled() -> SerEstimate:
        n = seeds_done * mc.symbols_per_seed
        lo, hi = wilson_interval(errors, n)
        return SerEstimate(errors=errors, symbols=n, ser=errors / n,
                           wilson_lo=lo, wilson_hi=hi,
                           seeds_used=seeds_done,
                           identity_errors=identity,
                           amplitude_errors=amplitude)

    own_runner = runner is None
    if own_runner:
        runner = _SeedRunner().__enter__()
    try:
        next_seed = 0
        while seeds_done < mc.max_seeds:
            hi_seed = min(mc.max_seeds,
                          max(mc.min_seeds, next_seed + runner.workers))
            batch = [task(i) for i in range(next_seed, hi_seed)]
            results = sorted(runner.run(batch))
            next_seed = hi_seed
            for _, err, id_err, amp_err in results:
                errors += err
                identity += id_err
                amplitude += amp_err
                seeds_done += 1
                if seeds_done >= mc.min_seeds:
                    estimate = pooled()
                    if estimate.half_width <= mc.wilson_half_width:
                        return estimate
        return pooled()
    finally:
        if own_runner:
            runner.__exit__()


# ---------------------------------------------------------------------------
# Analytic SER prediction and LoD bracketing


def _predicted_class_means(engine: SymbolEngine,
                           cal_free_sigma: float) -> np.ndarray:
    """Directed-statistic class means from the deterministic pipeline."""
    scheme = engine.scheme
    means = []
    for idx in range(engine.alphabet_size):
        q_da, q_fht, _ = engine.mean_charges(idx)
        if scheme is Scheme.MOSK:
            val = (engine.signs[Species.DA] * q_da
                   - engine.signs[Species.FHT] * q_fht) / engine.sigma_delta
        else:
            target = engine.scenario.modulation.csk_axis
            sign = engine.signs[target]
            q_t = q_da if target is Species.DA else q_fht
            val = sign * q_t / cal_free_sigma
        means.append(val)
    return np.asarray(means)


def predict_ser(scenario: Scenario, scheme: Scheme, n_m: float, r: float, *,
                ctrl: bool | None = None) -> float:
    """Equal-variance Gaussian SER approximation used for bracketing.

    Class means come from mean transport -> mean-field occupancy -> mean
    charge; noise sigma comes from the surrogate normalizers. Adjacent-pair
    errors are summed with equal priors.
    """
    ctrl = scenario.modulation.ctrl if ctrl is None else ctrl
    engine = SymbolEngine(scenario, scheme, n_m, r=r, ctrl=ctrl, isi=False)
    sigma_q = engine.sigma_referenced if ctrl else engine.sigma_single
    rho_cc = scenario.noise.rho_cc

    if scheme is Scheme.MOSK:
        mu = _predicted_class_means(engine, sigma_q)
        return gaussian_ser(mu[0], mu[1], 1.0)

    if scheme is Scheme.CSK4:
        mu = np.sort(_predicted_class_means(engine, sigma_q))
        # statistic noise variance 1 + rho_cc^2 - 2 rho_cc corr(q_t, q_o)
        corr = 0.5 if ctrl else (scenario.noise.rho * engine.surrogate.lf
                                 / engine.surrogate.single)
        sigma = math.sqrt(max(1.0 + rho_cc * rho_cc - 2.0 * rho_cc * corr,
                              1e-12))
        per_class = np.zeros(4)
        for i in range(3):
            p = gaussian_ser(mu[i], mu[i + 1], sigma)
            per_class[i] += p
            per_class[i + 1] += p
        return float(np.mean(per_class))

    # Hybrid: identity branch on the MoSK contrast plus one amplitude
    # branch per species, combined as p_id + (1 - p_id) p_amp.
    gamma = []
    amp = {}
    for idx in range(engine.alphabet_size):
        q_da, q_fht, _ = engine.mean_charges(idx)
        gamma.append((engine.signs[Species.DA] * q_da
                      - engine.signs[Species.FHT] * q_fht)
                     / engine.sigma_delta)
        sp = engine.level_species[idx]
        sign = engine.signs[sp]
        q_t = q_da if sp is Species.DA else q_fht
        amp.setdefault(sp, []).append(sign * q_t / sigma_q)
    p_id = 0.5 * (gaussian_ser(gamma[0], gamma[2], 1.0)
                  + gaussian_ser(gamma[1], gamma[3], 1.0))
    p_amp = float(np.mean([gaussian_ser(lo, hi, 1.0)
                           for lo, hi in amp.values()]))
    return p_id + (1.0 - p_id) * p_amp


def gaussian_bracket_lod(scenario: Scenario, scheme: Scheme, r: float, *,
                         ctrl: bool | None = None) -> tuple[float, float]:
    """Factor-2 bracket around the predicted LoD: smallest (N, 2N) whose
    predicted SER straddles the target."""
    target = scenario.montecarlo.target_ser
    n = 1.0
    if predict_ser(scenario, scheme, n, r, ctrl=ctrl) <= target:
        return (1.0, 2.0)
    while n < LOD_MAX_NM:
        n *= 2.0
        if predict_ser(scenario, scheme, n, r, ctrl=ctrl) <= target:
            return (n / 2.0, n)
    raise LodSearchError(
        f"target SER {target} not bracketable below {LOD_MAX_NM:.0e} "
        "molecules/symbol")


def _meets_target(est: SerEstimate, target: float, hw_target: float) -> bool:
    # Wilson upper bound within 4% of target, or the point estimate at
    # target with the stop-rule precision reached.
    return (est.wilson_hi <= 1.04 * target
            or (est.ser <= target and est.half_width <= hw_target))


def find_lod(scenario: Scenario, scheme: Scheme, r: float, master_seed: int,
             *, ctrl: bool | None = None,
             runner: _SeedRunner | None = None) -> LodResult:
    """Smallest molecule budget with validated SER at or below the target.

    Bisection on log N_m inside the Gaussian bracket, each probe evaluated
    with estimate_ser; terminates once the bracket ratio is 1.02.
    """
    ctrl = scenario.modulation.ctrl if ctrl is None else ctrl
    mc = scenario.montecarlo
    lo, hi = gaussian_bracket_lod(scenario, scheme, r, ctrl=ctrl)
    lo, hi = max(1, int(round(lo))), max(2, int(round(hi)))
    trace: list[tuple[int, SerEstimate]] = []
    seen: dict[int, SerEstimate] = {}
    probes = 0

    def evaluate(n_m: int) -> SerEstimate:
        nonlocal probes
        if n_m in seen:  # re-probing a budget replays identical streams
            return seen[n_m]
        probes += 1
        if probes > mc.lod_max_probes:
            raise LodSearchError(
                f"no convergence within {mc.lod_max_probes} probes")
        est = estimate_ser(scenario, scheme, float(n_m), r, mc.isi,
                           master_seed, ctrl=ctrl, runner=runner)
        trace.append((n_m, est))
        seen[n_m] = est
        return est

    # Make sure the upper end really meets the target and the lower end
    # really fails it, expanding the analytic bracket when it is off.
    while not _meets_target(evaluate(hi), mc.target_ser,
                            mc.wilson_half_width):
        lo = hi
        hi *= 2
        if hi > LOD_MAX_NM:
            raise LodSearchError("upper bracket exceeded the search cap")
    while lo > 1 and _meets_target(evaluate(lo), mc.target_ser,
                                   mc.wilson_half_width):
        hi = lo
        lo = max(1, lo // 2)

    while hi / lo > mc.lod_bracket_ratio:
        mid = int(round(math.sqrt(float(lo) * float(hi))))
        if mid in (lo, hi):
            break
        if _meets_target(evaluate(mid), mc.target_ser, mc.wilson_half_width):
            hi = mid
        else:
            lo = mid
    return LodResult(r=r, scheme=scheme, ctrl_enabled=ctrl, lod=hi,
                     trace=trace)


# ---------------------------------------------------------------------------
# Sweeps

DEVICE_GM_GRID = tuple(np.linspace(1e-3, 10e-3, 10))
DEVICE_CTOT_GRID = tuple(np.linspace(10e-9, 100e-9, 10))
TS_SWEEP_DEFAULT = (36.5, 73.0, 109.5, 146.0, 219.0)
RHO_SWEEP_DEFAULT = (0.1, 0.3, 0.5, 0.6, 0.7, 0.9)
DIFFUSION_SWEEP_DEFAULT = (0.5, 0.75, 1.0, 1.5, 2.0)
TEMPERATURE_SWEEP_DEFAULT = (285.0, 295.0, 310.0, 320.0, 330.0)

SWEEP_AXES = ("nm", "distance", "ts", "device", "rho", "diffusion",
              "temperature")


@dataclass
class SweepSpec:
    axis: str
    schemes: tuple[Scheme, ...]
    ctrl_options: tuple[bool, ...]
    values: tuple | None = None
    n_m: float | None = None
    r: float | None = None
    isi: bool | None = None
    with_lod: bool = False
    master_seed: int | None = None


def _default_values(axis: str, scenario: Scenario) -> tuple:
    return {
        "nm": tuple(scenario.modulation.n_m * f
                    for f in (0.5, 0.75, 1.0, 1.25, 1.5)),
        "distance": tuple(scenario.montecarlo.distances),
        "ts": TS_SWEEP_DEFAULT,
        "device": tuple((gm, ct) for ct in DEVICE_CTOT_GRID
                        for gm in DEVICE_GM_GRID),
        "rho": RHO_SWEEP_DEFAULT,
        "diffusion": DIFFUSION_SWEEP_DEFAULT,
        "temperature": TEMPERATURE_SWEEP_DEFAULT,
    }[axis]


def run_sweep(scenario: Scenario, spec: SweepSpec,
              flush=None) -> list[ResultRow]:
    """Evaluate estimate_ser (and find_lod where requested) over one sweep
    axis, one row per (point, scheme, ctrl flag). MoSK ignores the control
    channel, so it contributes a single ctrl=off variant. Completed rows
    are handed to `flush` as they arrive so partial results survive."""
    if spec.axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {spec.axis!r}")
    values = spec.values or _default_values(spec.axis, scenario)
    master = scenario.montecarlo.seed if spec.master_seed is None \
        else spec.master_seed
    base_nm = scenario.modulation.n_m if spec.n_m is None else spec.n_m
    base_r = scenario.medium.r if spec.r is None else spec.r
    isi = scenario.montecarlo.isi if spec.isi is None else spec.isi

    rows: list[ResultRow] = []
    with _SeedRunner() as runner:
        for value in values:
            for scheme in spec.schemes:
                ctrl_opts = ((False,) if scheme is Scheme.MOSK
                             else spec.ctrl_options)
                for ctrl in ctrl_opts:
                    row = _sweep_point(scenario, spec.axis, value, scheme,
                                       ctrl, base_nm, base_r, isi, master,
                                       spec.with_lod, runner)
                    rows.append(row)
                    if flush is not None:
                        flush(row)
    return rows


def _sweep_point(scenario: Scenario, axis: str, value, scheme: Scheme,
                 ctrl: bool, n_m: float, r: float, isi: bool, master: int,
                 with_lod: bool, runner: _SeedRunner) -> ResultRow:
    ts_override = None
    diffusion_scale = 1.0
    scn = scenario
    value2 = None
    if axis == "nm":
        n_m = float(value)
    elif axis == "distance":
        r = float(value)
    elif axis == "ts":
        ts_override = float(value)
    elif axis == "device":
        gm, ctot = value
        value, value2 = float(gm), float(ctot)
        scn = replace(scenario,
                      device=replace(scenario.device, g_m=gm, c_tot=ctot))
    elif axis == "rho":
        scn = replace(scenario,
                      noise=replace(scenario.noise, rho=float(value)))
    elif axis == "diffusion":
        diffusion_scale = float(value)
    elif axis == "temperature":
        scn = replace(scenario, medium=replace(scenario.medium,
                                               temperature=float(value)))

    start = time.perf_counter()
    est = estimate_ser(scn, scheme, n_m, r, isi, master, ctrl=ctrl,
                       ts_override=ts_override,
                       diffusion_scale=diffusion_scale, runner=runner)
    lod = None
    if with_lod:
        lod = find_lod(scn, scheme, r, master, ctrl=ctrl, runner=runner).lod
    engine = SymbolEngine(scn, scheme, n_m, r=r, ctrl=ctrl, isi=isi,
                          ts_override=ts_override,
                          diffusion_scale=diffusion_scale)
    return ResultRow(
        axis=axis, value=None if value is None else float(value),
        value2=value2, scheme=scheme.value, ctrl="on" if ctrl else "off",
        nm=n_m, r=r, ts=engine.t_s, w=engine.w, errors=est.errors,
        symbols=est.symbols, ser=est.ser, wilson_lo=est.wilson_lo,
        wilson_hi=est.wilson_hi, seeds_used=est.seeds_used, lod=lod,
        runtime_s=time.perf_counter() - start, master_seed=master,
        id_errors=est.identity_errors, amp_errors=est.amplitude_errors)
