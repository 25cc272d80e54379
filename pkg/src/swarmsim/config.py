"""Environment configuration: one dataclass tree, INI round-trip, and a
stable content hash used to pair trajectory dumps with the settings that
produced them.
"""

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import QuadrotorParams
from .errors import ConfigError
from .interactions import CollisionParams, DownwashParams
from .rewards import RewardCoeffs
from .scenarios import ScenarioSpec
from .sensing import SensorNoiseParams

# Default multiplicative randomization ranges, applied per episode when
# domain_rand is on. Keys are QuadrotorParams fields.
DEFAULT_DR_RANGES = {
    "mass": (0.92, 1.08),
    "f_max": (0.9, 1.1),
    "motor_settling_time": (0.85, 1.15),
    "torque_to_thrust": (0.95, 1.05),
}


@dataclass
class SwarmEnvConfig:
    n_agents: int = 8
    k_neighbors: int = 2
    control_freq: float = 100.0
    sim_freq: float = 200.0
    episode_duration: float = 15.0
    room_extent: tuple = (10.0, 10.0, 10.0)

    motor_lag: bool = True
    motor_noise: bool = True
    collisions: bool = True
    collision_noise: bool = True
    surfaces: bool = True
    ground: bool = True
    downwash: bool = True
    domain_rand: bool = False
    early_terminate_on_crash: bool = False

    quad: QuadrotorParams = field(default_factory=QuadrotorParams)
    collision: CollisionParams = field(default_factory=CollisionParams)
    downwash_params: DownwashParams = field(default_factory=DownwashParams)
    sensor: SensorNoiseParams = field(default_factory=SensorNoiseParams)
    rewards: RewardCoeffs = field(default_factory=RewardCoeffs)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    dr_ranges: dict = field(default_factory=lambda: dict(DEFAULT_DR_RANGES))

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_agents < 1:
            raise ConfigError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.k_neighbors < 0:
            raise ConfigError(f"k_neighbors must be >= 0, got {self.k_neighbors}")
        if self.k_neighbors > self.n_agents - 1:
            raise ConfigError(
                f"k_neighbors={self.k_neighbors} needs at least "
                f"{self.k_neighbors + 1} agents, got {self.n_agents}"
            )
        if not (self.control_freq > 0 and self.sim_freq > 0):
            raise ConfigError("control_freq and sim_freq must be > 0")
        ratio = self.sim_freq / self.control_freq
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError(
                f"sim_freq ({self.sim_freq}) must be an integer multiple of "
                f"control_freq ({self.control_freq})"
            )
        steps = self.episode_duration * self.control_freq
        if not (steps > 0) or abs(steps - round(steps)) > 1e-9:
            raise ConfigError(
                f"episode_duration * control_freq must be a positive integer, got {steps}"
            )
        if len(self.room_extent) != 3 or any(e <= 0 for e in self.room_extent):
            raise ConfigError(f"room_extent must be three positive lengths, got {self.room_extent}")
        if self.motor_lag and 1.0 / self.sim_freq >= self.quad.motor_settling_time:
            raise ConfigError(
                "sim step must be shorter than motor_settling_time when motor lag is on"
            )
        for key, rng in self.dr_ranges.items():
            if not hasattr(self.quad, key):
                raise ConfigError(f"unknown quadrotor field {key!r} in domain_rand ranges")
            lo, hi = rng
            if not (0 < lo <= hi):
                raise ConfigError(f"domain_rand range for {key!r} must satisfy 0 < lo <= hi")
        # Collision code carries the room so it stays self-contained.
        if tuple(self.collision.room_extent) != tuple(self.room_extent):
            self.collision = replace(self.collision, room_extent=tuple(self.room_extent))

    # -- derived quantities ------------------------------------------------

    @property
    def dt_control(self):
        return 1.0 / self.control_freq

    @property
    def dt_sim(self):
        return 1.0 / self.sim_freq

    @property
    def substeps(self):
        return int(round(self.sim_freq / self.control_freq))

    @property
    def episode_steps(self):
        return int(round(self.episode_duration * self.control_freq))

    @property
    def obs_length(self):
        return 18 + 6 * self.k_neighbors


_SECTION_OBJECTS = {
    "quadrotor": "quad",
    "collision": "collision",
    "downwash": "downwash_params",
    "sensor_noise": "sensor",
    "rewards": "rewards",
    "scenario": "scenario",
}

_ENV_FIELDS = (
    "n_agents", "k_neighbors", "control_freq", "sim_freq", "episode_duration",
    "room_extent", "motor_lag", "motor_noise", "collisions", "collision_noise",
    "surfaces", "ground", "downwash", "domain_rand", "early_terminate_on_crash",
)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_like(template, text, where):
    """Parse ``text`` into the same type as ``template``."""
    text = text.strip()
    if isinstance(template, bool):
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{where}: expected a boolean, got {text!r}")
    if isinstance(template, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {text!r}") from None
    if isinstance(template, float):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {text!r}") from None
    if isinstance(template, tuple):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if template and isinstance(template[0], str):
            return tuple(parts)
        elem = template[0] if template else 0.0
        return tuple(_parse_like(elem, p, where) for p in parts)
    if isinstance(template, str):
        return text
    raise ConfigError(f"{where}: unsupported value type {type(template).__name__}")


def _set_section_field(cfg, section, key, raw):
    where = f"[{section}] {key}"
    if section == "env":
        if key not in _ENV_FIELDS:
            raise ConfigError(f"{where}: unknown key")
        setattr(cfg, key, _parse_like(getattr(cfg, key), raw, where))
        return
    if section == "domain_rand":
        if not hasattr(cfg.quad, key):
            raise ConfigError(f"{where}: unknown quadrotor field")
        pair = _parse_like((0.0, 0.0), raw, where)
        if len(pair) != 2:
            raise ConfigError(f"{where}: expected 'lo, hi'")
        cfg.dr_ranges[key] = pair
        return
    attr = _SECTION_OBJECTS.get(section)
    if attr is None:
        raise ConfigError(f"unknown config section [{section}]")
    obj = getattr(cfg, attr)
    if section == "collision" and key == "room_extent":
        raise ConfigError(f"{where}: set room_extent under [env]")
    names = {f.name for f in dataclasses.fields(obj)}
    if key not in names:
        raise ConfigError(f"{where}: unknown key")
    value = _parse_like(getattr(obj, key), raw, where)
    setattr(cfg, attr, replace(obj, **{key: value}))


def load_config(path):
    """Build a config from an INI file, starting from the defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    cfg = SwarmEnvConfig()
    if not cfg.domain_rand:
        cfg.dr_ranges = dict(DEFAULT_DR_RANGES)
    for section in parser.sections():
        if section == "domain_rand":
            cfg.dr_ranges = {}
        for key, raw in parser.items(section):
            _set_section_field(cfg, section.lower(), key.lower(), raw)
    cfg.validate()
    return cfg


def apply_overrides(cfg, overrides):
    """Apply {'section.key': value} or bare env-level {'key': value} pairs.

    Values may be already-typed Python objects or strings in INI syntax.
    """
    for dotted, value in overrides.items():
        if "." in dotted:
            section, key = dotted.split(".", 1)
        else:
            section, key = "env", dotted
        raw = value if isinstance(value, str) else _format_value(value)
        _set_section_field(cfg, section.lower(), key.lower(), raw)
    cfg.validate()
    return cfg


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list, np.ndarray)):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def canonical_text(cfg):
    """Stable text form of every setting; equal configs give equal text."""
    lines = []
    for key in sorted(_ENV_FIELDS):
        lines.append(f"env.{key}={_format_value(getattr(cfg, key))}")
    for section in sorted(_SECTION_OBJECTS):
        obj = getattr(cfg, _SECTION_OBJECTS[section])
        for f in sorted(dataclasses.fields(obj), key=lambda f: f.name):
            lines.append(f"{section}.{f.name}={_format_value(getattr(obj, f.name))}")
    for key in sorted(cfg.dr_ranges):
        lines.append(f"domain_rand.{key}={_format_value(cfg.dr_ranges[key])}")
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    """Hex SHA-256 of the canonical text."""
    return hashlib.sha256(canonical_text(cfg).encode("utf-8")).hexdigest()
