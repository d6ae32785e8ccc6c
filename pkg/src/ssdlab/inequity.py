"""Inequity-averse subjective rewards.

The transform charges each agent for payoff gaps: an envy term for every
player ahead of it and a guilt term for every player behind it. In a Markov
game the per-step comparison uses temporally smoothed reward traces instead
of instantaneous rewards, so one agent's lucky step does not register as
lasting inequity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class IAParams:
    """Inequity weights and smoothing constants for one agent.

    ``envy_weight`` scales disadvantageous inequity (others ahead of me);
    ``guilt_weight`` scales advantageous inequity (me ahead of others).
    A heterogeneous population is a list of IAParams, one per agent.
    """
    envy_weight: float = 5.0
    guilt_weight: float = 0.05
    trace_decay: float = 0.975
    discount: float = 0.99

    def __post_init__(self):
        if self.envy_weight < 0:
            raise ConfigError(f"envy_weight must be >= 0, got {self.envy_weight}")
        if self.guilt_weight < 0:
            raise ConfigError(f"guilt_weight must be >= 0, got {self.guilt_weight}")
        if not 0.0 <= self.trace_decay <= 1.0:
            raise ConfigError(f"trace_decay must be in [0,1], got {self.trace_decay}")
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError(f"discount must be in (0,1], got {self.discount}")


SELFISH = IAParams(envy_weight=0.0, guilt_weight=0.0)


def per_agent_params(params, n: int) -> list[IAParams]:
    """Broadcast a single IAParams to n agents, or validate a list of n."""
    if isinstance(params, IAParams):
        return [params] * n
    params = list(params)
    if len(params) != n:
        raise ConfigError(f"expected {n} per-agent params, got {len(params)}")
    return params


def _param_arrays(params, n: int):
    plist = per_agent_params(params, n)
    envy = np.array([p.envy_weight for p in plist])
    guilt = np.array([p.guilt_weight for p in plist])
    decay = np.array([p.trace_decay * p.discount for p in plist])
    return envy, guilt, decay


def _inequity_penalty(values: np.ndarray, envy: np.ndarray, guilt: np.ndarray) -> np.ndarray:
    """Total envy+guilt charge per agent from pairwise gaps in ``values``."""
    n = len(values)
    gaps = values[None, :] - values[:, None]   # gaps[i, j] = v_j - v_i
    ahead = np.clip(gaps, 0.0, None).sum(axis=1)
    behind = np.clip(-gaps, 0.0, None).sum(axis=1)
    return (envy * ahead + guilt * behind) / (n - 1)


def fs_utility(rewards, params) -> np.ndarray:
    """Inequity-discounted utility of a one-shot reward vector."""
    rewards = np.asarray(rewards, dtype=np.float64)
    n = rewards.shape[0]
    if n < 2:
        raise ConfigError("inequity needs at least two players")
    envy, guilt, _ = _param_arrays(params, n)
    return rewards - _inequity_penalty(rewards, envy, guilt)


def update_traces(traces, rewards, params) -> np.ndarray:
    """One smoothing step: shrink old traces, add this step's rewards."""
    traces = np.asarray(traces, dtype=np.float64)
    rewards = np.asarray(rewards, dtype=np.float64)
    _, _, decay = _param_arrays(params, traces.shape[0])
    return decay * traces + rewards


def subjective_rewards(rewards, traces, params) -> np.ndarray:
    """Per-step utility: extrinsic reward minus inequity charged on traces.

    ``traces`` must already include the current step's rewards.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    traces = np.asarray(traces, dtype=np.float64)
    n = rewards.shape[0]
    if n < 2:
        raise ConfigError("inequity needs at least two players")
    if traces.shape != rewards.shape:
        raise ConfigError(f"traces shape {traces.shape} != rewards shape {rewards.shape}")
    envy, guilt, _ = _param_arrays(params, n)
    return rewards - _inequity_penalty(traces, envy, guilt)


class InequityPipeline:
    """Stateful per-episode wrapper: traces plus optional intrinsic delay.

    Feeding it the step's extrinsic rewards returns the subjective rewards.
    With ``intrinsic_delay`` > 0 the intrinsic component (u - r) is held back
    and delivered that many steps late; the extrinsic component always passes
    through unchanged, so the underlying game is not altered.
    """

    def __init__(self, params, n_agents: int, intrinsic_delay: int = 0):
        if intrinsic_delay < 0:
            raise ConfigError(f"intrinsic_delay must be >= 0, got {intrinsic_delay}")
        self.params = per_agent_params(params, n_agents)
        self.n_agents = n_agents
        self.intrinsic_delay = intrinsic_delay
        self.reset()

    def reset(self) -> None:
        self.traces = np.zeros(self.n_agents, dtype=np.float64)
        self._pending: deque[np.ndarray] = deque()

    def step(self, extrinsic: np.ndarray) -> np.ndarray:
        self.traces = update_traces(self.traces, extrinsic, self.params)
        u = subjective_rewards(extrinsic, self.traces, self.params)
        if self.intrinsic_delay == 0:
            return u
        self._pending.append(u - extrinsic)
        intrinsic = (self._pending.popleft()
                     if len(self._pending) > self.intrinsic_delay
                     else np.zeros(self.n_agents))
        return extrinsic + intrinsic
