"""Shared machinery for the gridworld Markov games.

Each environment owns one GridState and advances it through a fixed phase
order per step: movement, beams, apple consumption, then game-specific
dynamics. The fixed ordering keeps every trajectory reproducible from the
seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..engine import (Action, Cell, EngineConfig, GridState, Observation,
                      load_map, observe, project_beam, resolve_moves)
from ..errors import ConfigError, EpisodeDoneError


def load_bundled_map(name: str) -> str:
    """Read one of the ASCII maps shipped with the package."""
    return resources.files("ssdlab.maps").joinpath(f"{name}.txt").read_text()


@dataclass
class StepResult:
    observations: list[Observation]
    extrinsic_rewards: np.ndarray   # float64 (N,)
    done: bool
    info: dict


def _empty_info(n: int) -> dict:
    return {
        "apples_eaten": np.zeros(n, dtype=np.int64),
        "waste_cleaned": np.zeros(n, dtype=np.int64),
        "fines_fired": np.zeros(n, dtype=np.int64),
        "fines_received": np.zeros(n, dtype=np.int64),
        "buttons_pressed": np.zeros(n, dtype=np.int64),
        "waste_spawned": 0,
        "apples_spawned": 0,
    }


class GridEnv:
    """Base Markov-game environment: subclasses fill in the dynamics phases."""

    id = "base"
    has_clean_beam = False

    def __init__(self, map_text: str, config, n_agents: int | None = None,
                 engine_config: EngineConfig | None = None):
        self.map_text = map_text
        self.config = config
        self.engine_config = engine_config or EngineConfig()
        template = load_map(map_text)
        if n_agents is not None:
            if n_agents > len(template.agents):
                raise ConfigError(
                    f"map supports at most {len(template.agents)} agents, asked for {n_agents}")
            template.agents = template.agents[:n_agents]
        self.n_agents = len(template.agents)
        self.state: GridState = template
        self._done = True
        self._traces = np.zeros(self.n_agents, dtype=np.float64)
        self._seed = None

    # -- public API ------------------------------------------------------

    def fresh(self) -> "GridEnv":
        """Independent instance with the same map and config (for workers)."""
        return type(self)(self.map_text, self.config, n_agents=self.n_agents,
                          engine_config=self.engine_config)

    def action_set(self) -> tuple[Action, ...]:
        base = (Action.NOOP, Action.FORWARD, Action.BACKWARD, Action.STEP_LEFT,
                Action.STEP_RIGHT, Action.ROTATE_LEFT, Action.ROTATE_RIGHT,
                Action.FIRE_FINE)
        return base + (Action.FIRE_CLEAN,) if self.has_clean_beam else base

    @property
    def done(self) -> bool:
        return self._done

    def observations(self) -> list:
        """Fresh per-agent observations built from the current traces.

        Step results carry observations made with the traces that were set
        before the step; callers that update traces from the step's rewards
        re-observe through this.
        """
        return self._observations()

    def set_reward_traces(self, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_agents,):
            raise ConfigError(f"expected {self.n_agents} trace values, got {values.shape}")
        self._traces = values.copy()

    def reset(self, seed: int) -> StepResult:
        state = load_map(self.map_text)
        state.agents = state.agents[:self.n_agents]
        state.reseed(seed)
        self.state = state
        self._seed = seed
        self._traces = np.zeros(self.n_agents, dtype=np.float64)
        self._init_episode()
        self._done = False
        return StepResult(observations=self._observations(),
                          extrinsic_rewards=np.zeros(self.n_agents),
                          done=False, info=_empty_info(self.n_agents))

    def step(self, actions) -> StepResult:
        if self._done:
            raise EpisodeDoneError(f"{self.id}: episode finished, call reset()")
        actions = [Action(a) for a in actions]
        valid = self.action_set()
        for i, a in enumerate(actions):
            if a not in valid:
                raise ConfigError(f"action {a.name} not available in {self.id} (agent {i})")

        rewards = np.zeros(self.n_agents, dtype=np.float64)
        info = _empty_info(self.n_agents)

        resolve_moves(self.state, actions)
        self.state.step += 1
        self._beam_phase(actions, rewards, info)
        self._consumption_phase(rewards, info)
        self._dynamics_phase(rewards, info)
        self._done = self._episode_over()

        return StepResult(observations=self._observations(),
                          extrinsic_rewards=rewards, done=self._done, info=info)

    # -- shared phases ---------------------------------------------------

    def _beam_phase(self, actions, rewards, info) -> None:
        cfg = self.config
        for agent_id, action in enumerate(actions):
            if action == Action.FIRE_FINE:
                beam = project_beam(self.state, agent_id, "fine", cfg.beam_length)
                if beam.hit_agents:
                    target = beam.hit_agents[0]
                    rewards[agent_id] += cfg.fine_cost
                    rewards[target] += cfg.fine_penalty
                    info["fines_fired"][agent_id] += 1
                    info["fines_received"][target] += 1
            elif action == Action.FIRE_CLEAN:
                beam = project_beam(self.state, agent_id, "clean", cfg.beam_length)
                for cell in beam.waste_cells:
                    self.state.cells[cell] = Cell.RIVER
                info["waste_cleaned"][agent_id] += len(beam.waste_cells)

    def _consumption_phase(self, rewards, info) -> None:
        for agent in self.state.agents:
            if self.state.cells[agent.position] == Cell.APPLE:
                self.state.cells[agent.position] = Cell.EMPTY
                rewards[agent.id] += 1.0
                info["apples_eaten"][agent.id] += 1

    def _observations(self) -> list[Observation]:
        return [observe(self.state, i, self._traces, self.engine_config)
                for i in range(self.n_agents)]

    def _unoccupied(self, mask: np.ndarray) -> np.ndarray:
        """Mask with agent-occupied cells cleared (nothing spawns under an agent)."""
        out = mask.copy()
        for agent in self.state.agents:
            out[agent.position] = False
        return out

    # -- hooks -----------------------------------------------------------

    def _init_episode(self) -> None:
        pass

    def _dynamics_phase(self, rewards, info) -> None:
        pass

    def _episode_over(self) -> bool:
        return self.state.step >= self.config.episode_length
