"""Scenario data model: parameter bundles, INI scenario files, derived constants.

A scenario file is a plain INI document with the sections

    [medium] [species.DA] [species.5HT] [species.CTRL]
    [device] [noise] [timing] [modulation] [montecarlo]

All values are SI (m, s, M, S, F, Ohm, A, Hz, K); there is no unit parsing.
Omitted keys fall back to the baseline defaults below; unknown sections or
keys are an error. Scenario objects are immutable after validation and safe
to share across workers.
"""

from __future__ import annotations

import configparser
import enum
import hashlib
import math
from dataclasses import dataclass, field, replace


class ScenarioError(ValueError):
    """A scenario violates a documented invariant."""


class ScenarioParseError(ScenarioError):
    """A scenario file could not be parsed against the schema."""


class Species(enum.Enum):
    DA = "DA"
    FHT = "5HT"
    CTRL = "CTRL"


class Scheme(enum.Enum):
    MOSK = "mosk"
    CSK4 = "csk4"
    HYBRID = "hybrid"


class TimingPolicy(enum.Enum):
    DIFFUSION_ONLY = "diffusion_only"
    BINDING_AWARE = "binding_aware"


SELECTIVE_SPECIES = (Species.DA, Species.FHT)


@dataclass(frozen=True)
class Medium:
    """Restricted extracellular medium: volume fraction, tortuosity, clearance."""

    alpha: float = 0.20        # extracellular volume fraction, 0 < alpha <= 1
    lam: float = 1.6           # tortuosity, >= 1
    k_clear: float = 0.01      # first-order clearance rate, 1/s
    temperature: float = 310.0  # K; enters only the thermal noise PSD
    r: float = 45e-6           # common source-to-gate separation, m


@dataclass(frozen=True)
class SpeciesChannel:
    """One selective sensing axis (DA or 5-HT) or the aptamer-free CTRL pixel."""

    name: Species
    d_aq: float                # aqueous diffusivity, m^2/s
    k_on: float                # on-rate, 1/(M*s)
    k_off: float               # off-rate, 1/s
    da_number: float = 0.0     # Damkoehler number softening the on-rate
    n_apt: int = 200_000_000   # aptamer site count per gate
    q_eff: float = 0.0         # signed effective charge factor, units of e
    r: float = 45e-6           # separation to this gate, m

    @property
    def k_on_eff(self) -> float:
        return effective_on_rate(self.k_on, self.da_number)

    @property
    def k_d(self) -> float:
        """Dissociation constant k_off / k_on_eff (M); inf for CTRL."""
        if self.k_on_eff == 0.0:
            return math.inf
        return self.k_off / self.k_on_eff


@dataclass(frozen=True)
class Device:
    """OECT small-signal operating point and noise parameterization."""

    g_m: float = 5e-3          # transconductance, S
    c_tot: float = 50e-9       # effective gate capacitance, F
    r_ch: float = 500.0        # channel resistance, Ohm
    i_dc: float = 100e-6       # drain bias current, A
    alpha_h: float = 1e-3      # Hooge parameter
    n_c: float = 4.5e11        # carrier number
    k_drift: float = 1e-16     # drift PSD coefficient, Hz
    b_det: float = 100.0       # detection bandwidth, Hz

    @property
    def k_f(self) -> float:
        """Flicker coefficient alpha_H / N_c."""
        return self.alpha_h / self.n_c


@dataclass(frozen=True)
class NoiseCorrelation:
    """Cross-channel correlation structure of the low-frequency noise."""

    rho: float = 0.9      # pre-subtraction selective<->CTRL LF correlation
    rho_cc: float = 0.5   # post-subtraction residual cross-axis coefficient
    enabled: bool = True  # master switch for electrical noise (tests only)


@dataclass(frozen=True)
class Timing:
    """Time step, decision window fraction, and the symbol-period policy."""

    dt: float = 0.01          # simulation step, s
    eta: float = 0.6          # tail-anchored window fraction W = eta*T_s
    guard: float = 0.15       # guard factor g on the characteristic timescale
    t_min: float = 5.0        # minimum symbol period, s
    c_t: float = 3.0          # conservative diffusion-timescale constant
    kappa: float = 5.0        # binding-aware constant (kappa/k_off_bar)
    policy: TimingPolicy = TimingPolicy.DIFFUSION_ONLY
    t_rel: float = 0.01       # rectangular release burst duration, s


@dataclass(frozen=True)
class Modulation:
    scheme: Scheme = Scheme.HYBRID
    n_m: float = 14_000.0          # mean molecule budget per symbol
    ctrl: bool = True              # control referencing for amplitude decisions
    csk_axis: Species = Species.DA


@dataclass(frozen=True)
class MonteCarlo:
    """Seed schedule, stop rule, and run switches."""

    symbols_per_seed: int = 2000
    min_seeds: int = 8
    max_seeds: int = 50
    wilson_half_width: float = 4e-3
    target_ser: float = 0.01
    cal_symbols_per_class: int = 400
    isi: bool = False
    seed: int = 1
    shot_noise: bool = True
    stochastic_binding: bool = True
    lod_max_probes: int = 30
    lod_bracket_ratio: float = 1.02
    distances: tuple[float, ...] = (25e-6, 30e-6, 35e-6, 40e-6, 45e-6,
                                    60e-6, 75e-6, 90e-6, 110e-6, 130e-6)


@dataclass(frozen=True)
class Scenario:
    medium: Medium = Medium()
    channels: dict[Species, SpeciesChannel] = field(default_factory=dict)
    device: Device = Device()
    noise: NoiseCorrelation = NoiseCorrelation()
    timing: Timing = Timing()
    modulation: Modulation = Modulation()
    montecarlo: MonteCarlo = MonteCarlo()

    def channel(self, species: Species) -> SpeciesChannel:
        return self.channels[species]

    @property
    def selective_channels(self) -> tuple[SpeciesChannel, SpeciesChannel]:
        return (self.channels[Species.DA], self.channels[Species.FHT])


def default_channels(r: float = 45e-6) -> dict[Species, SpeciesChannel]:
    """Baseline species channels at a common separation r."""
    return {
        Species.DA: SpeciesChannel(Species.DA, d_aq=4.9e-10, k_on=1e5,
                                   k_off=0.015, q_eff=-0.35, r=r),
        Species.FHT: SpeciesChannel(Species.FHT, d_aq=5.3e-10, k_on=1e5,
                                    k_off=0.003, q_eff=+0.35, r=r),
        Species.CTRL: SpeciesChannel(Species.CTRL, d_aq=4.9e-10, k_on=0.0,
                                     k_off=0.0, n_apt=0, q_eff=0.0, r=r),
    }


def baseline_scenario() -> Scenario:
    return _validated(Scenario(channels=default_channels()))


# ---------------------------------------------------------------------------
# Derived constants


def effective_diffusivity(d_aq: float, lam: float) -> float:
    """Tortuosity-restricted diffusivity D_eff = D / lambda^2."""
    if d_aq <= 0.0:
        raise ScenarioError("D out of range")
    if lam < 1.0:
        raise ScenarioError("lambda out of range")
    return d_aq / (lam * lam)


def effective_on_rate(k_on: float, da_number: float) -> float:
    """Transport-limitation-softened on-rate k_on / (1 + Da)."""
    if da_number < 0.0:
        raise ScenarioError("Da out of range")
    return k_on / (1.0 + da_number)


# CSK-4 levels are {1/4, 2/4, 3/4, 1} of a peak count; Hybrid uses {1/2, 1}.
CSK4_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
HYBRID_FRACTIONS = (0.5, 1.0)


def alphabet_levels(scheme: Scheme, n_m: float,
                    csk_axis: Species = Species.DA,
                    ) -> list[tuple[Species, float]]:
    """Mean emission count per symbol index, normalized so the equal-prior
    mean equals n_m.

    Symbol ordering is fixed: MoSK 0=DA, 1=5-HT; CSK-4 index k carries
    fraction (k+1)/4 of the peak on the CSK axis; Hybrid packs (MSB, LSB) =
    (species, amplitude) as index = 2*MSB + LSB with MSB 0=DA, 1=5-HT and
    LSB 0=low, 1=high. n_m = 0 is allowed for no-signal diagnostics.
    """
    if n_m < 0.0:
        raise ScenarioError("N_m out of range")
    if scheme is Scheme.MOSK:
        return [(Species.DA, n_m), (Species.FHT, n_m)]
    if scheme is Scheme.CSK4:
        n_pk = n_m / (sum(CSK4_FRACTIONS) / len(CSK4_FRACTIONS))
        return [(csk_axis, f * n_pk) for f in CSK4_FRACTIONS]
    if scheme is Scheme.HYBRID:
        n_pk = n_m / (sum(HYBRID_FRACTIONS) / len(HYBRID_FRACTIONS))
        return [(sp, f * n_pk)
                for sp in (Species.DA, Species.FHT)
                for f in HYBRID_FRACTIONS]
    raise ScenarioError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Validation


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioError(message)


def _validated(scn: Scenario) -> Scenario:
    m = scn.medium
    _require(0.0 < m.alpha <= 1.0, "alpha out of range")
    _require(m.lam >= 1.0, "lambda out of range")
    _require(m.k_clear >= 0.0, "k_clear out of range")
    _require(m.temperature > 0.0, "temperature out of range")
    _require(m.r > 0.0, "r out of range")

    for sp in Species:
        _require(sp in scn.channels, f"missing channel {sp.value}")
        ch = scn.channels[sp]
        _require(ch.d_aq > 0.0, f"{sp.value}: D out of range")
        _require(ch.k_on >= 0.0, f"{sp.value}: k_on out of range")
        _require(ch.k_off >= 0.0, f"{sp.value}: k_off out of range")
        _require(ch.da_number >= 0.0, f"{sp.value}: Da out of range")
        _require(ch.n_apt >= 0, f"{sp.value}: N_apt out of range")
        _require(ch.r > 0.0, f"{sp.value}: r out of range")
    ctrl = scn.channels[Species.CTRL]
    _require(ctrl.k_on == 0.0 and ctrl.k_off == 0.0,
             "CTRL: binding rates must be zero")

    d = scn.device
    for name in ("g_m", "c_tot", "r_ch", "i_dc", "alpha_h", "n_c",
                 "k_drift", "b_det"):
        _require(getattr(d, name) > 0.0, f"{name} out of range")

    nz = scn.noise
    _require(0.0 <= nz.rho <= 1.0, "rho out of range")
    _require(abs(nz.rho_cc) < 1.0, "rho_cc out of range")

    t = scn.timing
    _require(t.dt > 0.0, "dt out of range")
    _require(0.0 < t.eta <= 1.0, "eta out of range")
    _require(t.guard >= 0.0, "guard out of range")
    _require(t.t_min > 0.0, "T_min out of range")
    _require(t.c_t > 0.0, "c_t out of range")
    _require(t.kappa > 0.0, "kappa out of range")
    _require(t.t_rel > 0.0, "T_rel out of range")
    _require(t.t_rel < t.t_min, "T_rel must be smaller than T_min")

    mod = scn.modulation
    _require(mod.n_m > 0.0, "N_m out of range")
    _require(mod.csk_axis in SELECTIVE_SPECIES, "csk_axis must be selective")

    mc = scn.montecarlo
    _require(mc.symbols_per_seed > 0, "symbols_per_seed out of range")
    _require(1 <= mc.min_seeds <= mc.max_seeds, "seed schedule out of range")
    _require(mc.wilson_half_width > 0.0, "wilson_half_width out of range")
    _require(0.0 < mc.target_ser < 1.0, "target_ser out of range")
    _require(mc.cal_symbols_per_class > 1, "cal_symbols_per_class out of range")
    _require(mc.seed >= 0, "seed out of range")
    _require(mc.lod_max_probes > 0, "lod_max_probes out of range")
    _require(mc.lod_bracket_ratio > 1.0, "lod_bracket_ratio out of range")
    _require(all(r > 0.0 for r in mc.distances), "distances out of range")
    return scn


# ---------------------------------------------------------------------------
# INI schema

_ENUM_KEYS = {
    "policy": {p.value: p for p in TimingPolicy},
    "scheme": {s.value: s for s in Scheme},
    "csk_axis": {"DA": Species.DA, "5HT": Species.FHT},
}

_SCHEMA: dict[str, dict[str, tuple]] = {
    "medium": {
        "alpha": (float, "alpha"), "lambda": (float, "lam"),
        "k_clear": (float, "k_clear"), "temperature": (float, "temperature"),
        "r": (float, "r"),
    },
    "species": {   # shared by species.DA / species.5HT / species.CTRL
        "D": (float, "d_aq"), "k_on": (float, "k_on"),
        "k_off": (float, "k_off"), "Da": (float, "da_number"),
        "N_apt": (int, "n_apt"), "q_eff": (float, "q_eff"), "r": (float, "r"),
    },
    "device": {
        "g_m": (float, "g_m"), "C_tot": (float, "c_tot"),
        "R_ch": (float, "r_ch"), "I_DC": (float, "i_dc"),
        "alpha_H": (float, "alpha_h"), "N_c": (float, "n_c"),
        "K_drift": (float, "k_drift"), "B_det": (float, "b_det"),
    },
    "noise": {
        "rho": (float, "rho"), "rho_cc": (float, "rho_cc"),
        "enabled": (bool, "enabled"),
    },
    "timing": {
        "dt": (float, "dt"), "eta": (float, "eta"), "guard": (float, "guard"),
        "T_min": (float, "t_min"), "c_t": (float, "c_t"),
        "kappa": (float, "kappa"), "policy": ("enum", "policy"),
        "T_rel": (float, "t_rel"),
    },
    "modulation": {
        "scheme": ("enum", "scheme"), "N_m": (float, "n_m"),
        "ctrl": (bool, "ctrl"), "csk_axis": ("enum", "csk_axis"),
    },
    "montecarlo": {
        "symbols_per_seed": (int, "symbols_per_seed"),
        "min_seeds": (int, "min_seeds"), "max_seeds": (int, "max_seeds"),
        "wilson_half_width": (float, "wilson_half_width"),
        "target_ser": (float, "target_ser"),
        "cal_symbols_per_class": (int, "cal_symbols_per_class"),
        "isi": (bool, "isi"), "seed": (int, "seed"),
        "shot_noise": (bool, "shot_noise"),
        "stochastic_binding": (bool, "stochastic_binding"),
        "lod_max_probes": (int, "lod_max_probes"),
        "lod_bracket_ratio": (float, "lod_bracket_ratio"),
        "distances": ("float_list", "distances"),
    },
}

_SPECIES_SECTIONS = {"species.DA": Species.DA, "species.5HT": Species.FHT,
                     "species.CTRL": Species.CTRL}


def _convert(section: str, key: str, kind, raw: str):
    raw = raw.strip()
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError("not an integer")
            return int(val)
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError("not a boolean")
        if kind == "enum":
            table = _ENUM_KEYS[key]
            if raw in table:
                return table[raw]
            raise ValueError(f"expected one of {sorted(table)}")
        if kind == "float_list":
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ScenarioParseError(
            f"[{section}] {key}: invalid value {raw!r} ({exc})") from None
    raise AssertionError(kind)


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text, fill defaults, and validate every invariant."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioParseError(f"{source}: {exc}") from None

    overrides: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section in _SPECIES_SECTIONS:
            table = _SCHEMA["species"]
        elif section in _SCHEMA and section != "species":
            table = _SCHEMA[section]
        else:
            raise ScenarioParseError(f"{source}: unknown section [{section}]")
        dest = overrides.setdefault(section, {})
        for key, raw in parser.items(section):
            if key not in table:
                raise ScenarioParseError(
                    f"{source}: unknown key {key!r} in section [{section}]")
            kind, attr = table[key]
            dest[attr] = _convert(section, key, kind, raw)

    medium = replace(Medium(), **overrides.get("medium", {}))
    channels = {}
    for sect, sp in _SPECIES_SECTIONS.items():
        base = default_channels(medium.r)[sp]
        channels[sp] = replace(base, **overrides.get(sect, {}))
    scn = Scenario(
        medium=medium,
        channels=channels,
        device=replace(Device(), **overrides.get("device", {})),
        noise=replace(NoiseCorrelation(), **overrides.get("noise", {})),
        timing=replace(Timing(), **overrides.get("timing", {})),
        modulation=replace(Modulation(), **overrides.get("modulation", {})),
        montecarlo=replace(MonteCarlo(), **overrides.get("montecarlo", {})),
    )
    return _validated(scn)


def load_scenario(path) -> Scenario:
    """Load a scenario file; see the module docstring for the schema."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_scenario(fh.read(), source=str(path))


# ---------------------------------------------------------------------------
# Serialization (stable ordering; parses back to an identical Scenario)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_scenario(scn: Scenario) -> str:
    """Serialize with every key explicit, in schema order."""
    parts = {"medium": scn.medium, "device": scn.device, "noise": scn.noise,
             "timing": scn.timing, "modulation": scn.modulation,
             "montecarlo": scn.montecarlo}
    lines: list[str] = []
    for section in ("medium", "species.DA", "species.5HT", "species.CTRL",
                    "device", "noise", "timing", "modulation", "montecarlo"):
        lines.append(f"[{section}]")
        if section in _SPECIES_SECTIONS:
            obj = scn.channels[_SPECIES_SECTIONS[section]]
            table = _SCHEMA["species"]
        else:
            obj = parts[section]
            table = _SCHEMA[section]
        for key, (kind, attr) in table.items():
            lines.append(f"{key} = {_fmt(getattr(obj, attr))}")
        lines.append("")
    return "\n".join(lines)


def scenario_hash(scn: Scenario) -> str:
    """Short digest identifying the scenario in result files."""
    return hashlib.sha256(dump_scenario(scn).encode()).hexdigest()[:12]
