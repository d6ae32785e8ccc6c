"""Shared fixtures: tiny hand-checkable maps and builders."""

import numpy as np
import pytest

from ssdlab import make_env
from ssdlab.envs.cleanup import CleanupConfig
from ssdlab.envs.harvest import HarvestConfig

# 7x5 open room, two spawn points, one apple cell, one river cell
TINY_MAP = "\n".join([
    "7x5 2",
    "#######",
    "#P....#",
    "#.A.R.#",
    "#...P.#",
    "#######",
])


@pytest.fixture
def tiny_env():
    env = make_env("harvest", map_text=TINY_MAP,
                   config=HarvestConfig(episode_length=50))
    env.reset(seed=0)
    return env


@pytest.fixture
def cleanup_env():
    env = make_env("cleanup", map_name="cleanup_mini",
                   config=CleanupConfig(episode_length=100))
    env.reset(seed=0)
    return env


@pytest.fixture
def harvest_env():
    env = make_env("harvest", map_name="harvest_mini",
                   config=HarvestConfig(episode_length=100))
    env.reset(seed=0)
    return env


def walk(env, moves_by_agent):
    """Step the env with per-agent action lists padded with NOOP."""
    horizon = max(len(m) for m in moves_by_agent)
    results = []
    for t in range(horizon):
        actions = [m[t] if t < len(m) else 0 for m in moves_by_agent]
        results.append(env.step(actions))
    return results


def total_rewards(results) -> np.ndarray:
    return np.sum([r.extrinsic_rewards for r in results], axis=0)
