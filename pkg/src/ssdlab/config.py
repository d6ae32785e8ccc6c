"""Experiment configuration files.

Flat key/value sections, chosen so configs diff cleanly in experiment
tracking. ``[experiment]`` names the run, ``[inequity]`` and ``[learner]``
set shared defaults, and optional ``[agent.<i>]`` sections override the
inequity parameters of single agents for heterogeneous populations.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field

from .errors import ConfigError
from .inequity import IAParams
from .learner import LearnerConfig

_EXPERIMENT_FIELDS = {
    "env": str,
    "map": str,
    "agents": int,
    "episodes": int,
    "episode_length": int,
    "seed": int,
    "intrinsic_delay": int,
    "out": str,
}

_INEQUITY_FIELDS = {
    "envy_weight": float,
    "guilt_weight": float,
    "trace_decay": float,
    "discount": float,
}

_LEARNER_FIELDS = {
    "backup_length": int,
    "discount": float,
    "learning_rate": float,
    "entropy_coeff": float,
    "value_loss_coeff": float,
    "workers": int,
    "family": str,
    "hidden_size": int,
    "tabular_capacity": int,
}


@dataclass
class ExperimentConfig:
    """One experiment: environment, population, learner, and bookkeeping."""

    env_id: str
    map_name: str | None = None
    n_agents: int | None = None
    episodes: int = 1
    episode_length: int | None = None
    seed: int = 0
    intrinsic_delay: int = 0
    out_dir: str | None = None
    inequity: IAParams = field(default_factory=IAParams)
    agent_overrides: dict[int, IAParams] = field(default_factory=dict)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    config_hash: str = ""

    def __post_init__(self):
        if self.episodes < 0:
            raise ConfigError(f"experiment.episodes must be >= 0, got {self.episodes}")
        if self.intrinsic_delay < 0:
            raise ConfigError(
                f"experiment.intrinsic_delay must be >= 0, got {self.intrinsic_delay}")
        if self.n_agents is not None and self.n_agents < 1:
            raise ConfigError(f"experiment.agents must be >= 1, got {self.n_agents}")
        if self.episode_length is not None and self.episode_length < 1:
            raise ConfigError(
                f"experiment.episode_length must be >= 1, got {self.episode_length}")

    def agent_params(self, n_agents: int) -> list[IAParams]:
        """Materialize the per-agent inequity parameters for n agents."""
        for idx in self.agent_overrides:
            if not 0 <= idx < n_agents:
                raise ConfigError(
                    f"agent.{idx} override out of range for {n_agents} agents")
        return [self.agent_overrides.get(i, self.inequity) for i in range(n_agents)]


def canonical_text(text: str) -> str:
    """Platform-independent normal form used for hashing."""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    lines = []
    for section in sorted(parser.sections()):
        for key in sorted(parser[section]):
            lines.append(f"{section}.{key}={parser[section][key].strip()}")
    return "\n".join(lines)


def config_hash(text: str) -> str:
    return hashlib.sha256(canonical_text(text).encode("utf-8")).hexdigest()


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; unknown sections or keys are errors naming them."""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    if "experiment" not in parser:
        raise ConfigError("config is missing the [experiment] section")
    exp = _typed_section(parser, "experiment", _EXPERIMENT_FIELDS)
    if "env" not in exp:
        raise ConfigError("experiment.env is required")

    base_ia = _ia_params(parser, "inequity") if "inequity" in parser else IAParams()
    learner = _learner_config(parser) if "learner" in parser else LearnerConfig()

    overrides: dict[int, IAParams] = {}
    for section in parser.sections():
        if section in ("experiment", "inequity", "learner"):
            continue
        if section.startswith("agent."):
            suffix = section[len("agent."):]
            if not suffix.isdigit():
                raise ConfigError(f"bad agent section [{section}]: index must be an integer")
            overrides[int(suffix)] = _ia_params(parser, section, defaults=base_ia)
        else:
            raise ConfigError(f"unknown config section [{section}]")

    return ExperimentConfig(
        env_id=exp["env"],
        map_name=exp.get("map"),
        n_agents=exp.get("agents"),
        episodes=exp.get("episodes", 1),
        episode_length=exp.get("episode_length"),
        seed=exp.get("seed", 0),
        intrinsic_delay=exp.get("intrinsic_delay", 0),
        out_dir=exp.get("out"),
        inequity=base_ia,
        agent_overrides=overrides,
        learner=learner,
        config_hash=config_hash(text),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config(text)


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def _typed_section(parser, section: str, fields: dict) -> dict:
    out = {}
    for key, raw in parser[section].items():
        if key not in fields:
            raise ConfigError(f"unknown key {section}.{key}")
        caster = fields[key]
        try:
            out[key] = caster(raw)
        except ValueError as exc:
            raise ConfigError(
                f"invalid value for {section}.{key}: {raw!r} is not {caster.__name__}"
            ) from exc
    return out


def _ia_params(parser, section: str, defaults: IAParams | None = None) -> IAParams:
    values = _typed_section(parser, section, _INEQUITY_FIELDS)
    base = dataclasses.asdict(defaults) if defaults is not None else {}
    base.update(values)
    return IAParams(**base)


def _learner_config(parser) -> LearnerConfig:
    return LearnerConfig(**_typed_section(parser, "learner", _LEARNER_FIELDS))
