"""Gridworld Markov games, selected by id string."""

from __future__ import annotations

from ..errors import ConfigError
from .base import GridEnv, StepResult, load_bundled_map
from .buttons import ButtonConfig, ButtonGameEnv
from .cleanup import CleanupConfig, CleanupEnv
from .harvest import HarvestConfig, HarvestEnv

DEFAULT_MAPS = {
    "cleanup": "cleanup_default",
    "harvest": "harvest_default",
    "dictate": "dictate",
    "give": "give",
    "take": "take",
}


def make_env(env_id: str, *, config=None, map_name: str | None = None,
             map_text: str | None = None, n_agents: int | None = None,
             engine_config=None) -> GridEnv:
    """Build an environment by id with its bundled default map.

    Pass ``map_name`` to use a different bundled map, or ``map_text`` to
    supply raw map text directly.
    """
    if env_id not in DEFAULT_MAPS:
        raise ConfigError(
            f"unknown environment id {env_id!r}; choose from {sorted(DEFAULT_MAPS)}")
    if map_text is None:
        map_text = load_bundled_map(map_name or DEFAULT_MAPS[env_id])
    if env_id == "cleanup":
        return CleanupEnv(map_text, config, n_agents=n_agents, engine_config=engine_config)
    if env_id == "harvest":
        return HarvestEnv(map_text, config, n_agents=n_agents, engine_config=engine_config)
    cfg = config if config is not None else ButtonConfig(kind=env_id)
    if cfg.kind != env_id:
        raise ConfigError(f"config kind {cfg.kind!r} does not match env id {env_id!r}")
    return ButtonGameEnv(map_text, cfg, n_agents=n_agents, engine_config=engine_config)


__all__ = [
    "ButtonConfig", "ButtonGameEnv", "CleanupConfig", "CleanupEnv",
    "GridEnv", "HarvestConfig", "HarvestEnv", "StepResult",
    "DEFAULT_MAPS", "load_bundled_map", "make_env",
]
