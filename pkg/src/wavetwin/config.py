"""Experiment configuration: a sectioned ``key = value`` text file.

Every key has a default, so an empty file describes the reference case. See
``configs/reference_case.cfg`` for the annotated schema.
"""
import configparser
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .exceptions import ConfigError
from .synthesis import NOISE_SPECTRA, SELECTORS

SELECTOR_NAMES = ("wave", "heave", "roll", "all")


@dataclass(frozen=True)
class GridSection:
    L: int = 256
    domain_length: float = 2 * math.pi


@dataclass(frozen=True)
class JonswapSection:
    kp: float = 16.0
    steepness: float = 0.11
    gamma: float = 3.3
    band: float = 3.0
    seed: int = 1


@dataclass(frozen=True)
class HosSection:
    M: int = 3
    steps_per_tp: int = 64
    breaking_cutoff: float = 0.75
    filter_every: int = 1


@dataclass(frozen=True)
class ShipSection:
    waterplane_per_lambda_p: float = 0.08
    draft_per_hs: float = 2.68
    x_c: float = 1.2 * math.pi
    kc_per_hs: float = -1.34
    kg: float = 0.0
    mass: float = 3.78e-3
    added_mass: float = 1.31e-3
    inertia: float = 2.02e-6
    added_inertia: float = 9.89e-7
    kappa33: float = 0.025
    beta33: float = 2.0
    nu33: float = 3.0
    kappa44: float = 3.0e-5
    beta44: float = 2.0
    nu44: float = 3.0
    memory_horizon_tp: float = 2.0


@dataclass(frozen=True)
class EnkfSection:
    n_members: int = 100
    inflation: float = 1.01
    param_inflation: float = 1.0
    r_mode: str = "known"
    augment: bool = True
    ma_guess_factor: float = 1.3
    ma_spread: float = 0.3
    kernel_guess_kappa: float = 0.015
    kernel_guess_beta: float = 1.5
    kernel_guess_nu: float = 3.5
    kernel_kappa_spread: float = 0.3
    kernel_beta_spread: float = 0.2
    kernel_nu_spread: float = 0.15
    kernel_stride: int = 4
    ma_min: float = 0.0
    ma_max: float = math.inf
    kernel_bound: float = 0.1


@dataclass(frozen=True)
class ObservationSection:
    selector: str = "all"
    probe_x: float = math.pi
    tau_t0: float = 1.0 / 16.0
    sigma_eta_frac: float = 0.316
    sigma_psi_frac: float = 0.0
    sigma_heave_hs: float = 0.05
    sigma_roll_deg: float = 0.05
    noise_spectrum: str = "wave"


@dataclass(frozen=True)
class RunSection:
    t_max_tp: float = 100.0
    seed: int = 7
    output_dir: str = "out"
    kernel_snapshots_tp: tuple = (0.0, 40.0, 100.0)
    log_every_tp: float = 1.0


SECTIONS = {
    "grid": GridSection,
    "jonswap": JonswapSection,
    "hos": HosSection,
    "ship": ShipSection,
    "enkf": EnkfSection,
    "observation": ObservationSection,
    "run": RunSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    jonswap: JonswapSection = field(default_factory=JonswapSection)
    hos: HosSection = field(default_factory=HosSection)
    ship: ShipSection = field(default_factory=ShipSection)
    enkf: EnkfSection = field(default_factory=EnkfSection)
    observation: ObservationSection = field(default_factory=ObservationSection)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        validate(self)

    # derived time scales (g = 1, deep water)
    @property
    def k0(self):
        return 2 * math.pi / self.grid.domain_length

    @property
    def Tp(self):
        return 2 * math.pi / math.sqrt(self.jonswap.kp * self.k0)

    @property
    def T0(self):
        return 2 * math.pi / math.sqrt(self.k0)

    @property
    def dt(self):
        return self.Tp / self.hos.steps_per_tp

    @property
    def steps_per_cycle(self):
        return int(round(self.observation.tau_t0 * self.T0 / self.dt))

    @property
    def n_cycles(self):
        return int(round(self.run.t_max_tp * self.hos.steps_per_tp / self.steps_per_cycle))

    def with_overrides(self, **sections):
        """Copy with some fields replaced, e.g. ``with_overrides(run={"seed": 3})``."""
        kw = {}
        for name, changes in sections.items():
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]")
            try:
                kw[name] = replace(getattr(self, name), **changes)
            except TypeError as err:
                raise ConfigError(f"[{name}]: {err}") from None
        return replace(self, **kw)

    def to_text(self):
        """Render as a config file that :func:`load_config` reads back unchanged."""
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            for key, value in asdict(getattr(self, name)).items():
                lines.append(f"{key} = {_format(value)}")
            lines.append("")
        return "\n".join(lines)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw, default, where):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {type(default).__name__}") from None


def validate(cfg):
    g, j, h, s, e, o, r = (cfg.grid, cfg.jonswap, cfg.hos, cfg.ship, cfg.enkf,
                           cfg.observation, cfg.run)
    checks = [
        (g.L >= 4 and g.L & (g.L - 1) == 0, "grid.L must be a power of two >= 4"),
        (g.domain_length > 0, "grid.domain_length must be positive"),
        (j.kp >= 1 and j.steepness > 0 and j.gamma >= 1 and j.band > 1,
         "jonswap: need kp >= 1, steepness > 0, gamma >= 1, band > 1"),
        (h.M >= 1, "hos.M must be >= 1"),
        (h.steps_per_tp >= 1, "hos.steps_per_tp must be >= 1"),
        (0 <= h.breaking_cutoff <= 1, "hos.breaking_cutoff must lie in [0, 1]"),
        (h.filter_every >= 0, "hos.filter_every must be >= 0"),
        (s.mass > 0 and s.inertia > 0, "ship mass and inertia must be positive"),
        (s.memory_horizon_tp > 0, "ship.memory_horizon_tp must be positive"),
        (e.n_members >= 2, "enkf.n_members must be >= 2"),
        (e.inflation >= 1 and e.param_inflation >= 1, "enkf inflation factors must be >= 1"),
        (e.r_mode in ("known", "empirical"), "enkf.r_mode must be known or empirical"),
        (min(e.ma_spread, e.kernel_kappa_spread, e.kernel_beta_spread, e.kernel_nu_spread) >= 0,
         "enkf spreads must be non-negative"),
        (e.kernel_stride >= 1, "enkf.kernel_stride must be >= 1"),
        (e.ma_min < e.ma_max and e.kernel_bound > 0, "enkf clamp bounds are inconsistent"),
        (o.selector in SELECTORS, f"observation.selector must be one of {sorted(SELECTORS)}"),
        (0 <= o.probe_x < g.domain_length, "observation.probe_x must lie in the domain"),
        (o.tau_t0 > 0, "observation.tau_t0 must be positive"),
        (min(o.sigma_eta_frac, o.sigma_psi_frac, o.sigma_heave_hs, o.sigma_roll_deg) >= 0,
         "observation noise levels must be non-negative"),
        (o.noise_spectrum in NOISE_SPECTRA,
         f"observation.noise_spectrum must be one of {NOISE_SPECTRA}"),
        (r.t_max_tp >= 0, "run.t_max_tp must be non-negative"),
        (r.log_every_tp > 0, "run.log_every_tp must be positive"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    steps = o.tau_t0 * cfg.T0 / cfg.dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or round(steps) < 1:
        raise ConfigError(f"DA interval is {steps:g} time steps; it must be a positive integer")
    cycles = r.t_max_tp * h.steps_per_tp / round(steps)
    if abs(cycles - round(cycles)) > 1e-9 * max(1.0, cycles):
        raise ConfigError("run.t_max_tp must be a whole number of DA intervals")


def load_config(path=None, text=None):
    """Parse a config file (or ``text``); missing keys keep their defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            parser.read(p, encoding="utf-8")
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from None
    kw = {}
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        cls = SECTIONS[name]
        defaults = {f.name: getattr(cls(), f.name) for f in fields(cls)}
        values = {}
        for key, raw in parser.items(name):
            if key not in defaults:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            values[key] = _parse(raw, defaults[key], f"[{name}] {key}")
        kw[name] = cls(**values)
    return ExperimentConfig(**kw)
