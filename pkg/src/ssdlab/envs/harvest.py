"""Harvest: a commons game.

Apples regrow at a rate set by how many apples remain nearby, so a region
stripped bare never recovers. Short-term greed permanently destroys the
resource; restraint keeps it productive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..engine import Cell
from ..errors import ConfigError
from ..kernels import l1_neighbor_counts
from .base import GridEnv

DEFAULT_REGROWTH = {0: 0.0, 1: 0.005, 2: 0.02, 3: 0.05}


@dataclass
class HarvestConfig:
    # probability of regrowth keyed by nearby-apple count; counts past the
    # largest key reuse its value
    regrowth_probs: dict = field(default_factory=lambda: dict(DEFAULT_REGROWTH))
    neighbor_radius: int = 2
    episode_length: int = 1000
    fine_cost: float = -1.0
    fine_penalty: float = -50.0
    beam_length: int = 5

    def __post_init__(self):
        if not self.regrowth_probs:
            raise ConfigError("regrowth_probs must be non-empty")
        for k, v in self.regrowth_probs.items():
            if int(k) < 0:
                raise ConfigError(f"regrowth count {k} is negative")
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"regrowth prob {v} outside [0,1]")
        if self.regrowth_probs.get(0, 0.0) != 0.0:
            raise ConfigError("regrowth prob at count 0 must be 0 (depletion is permanent)")
        if self.neighbor_radius < 1:
            raise ConfigError("neighbor_radius must be >= 1")
        if self.episode_length <= 0:
            raise ConfigError("episode_length must be positive")
        if not self.fine_penalty < self.fine_cost <= 0.0:
            raise ConfigError("need fine_penalty < fine_cost <= 0")

    def prob_for_count(self, count: int) -> float:
        cap = max(self.regrowth_probs)
        return self.regrowth_probs[min(count, cap)]


class HarvestEnv(GridEnv):
    id = "harvest"
    has_clean_beam = False

    def __init__(self, map_text, config=None, n_agents=None, engine_config=None):
        super().__init__(map_text, config or HarvestConfig(),
                         n_agents=n_agents, engine_config=engine_config)
        if not self.state.apple_capable.any():
            raise ConfigError("harvest map has no apple-capable cells")

    def _init_episode(self) -> None:
        # maps mark the initial orchard directly with apple cells
        pass

    def regrowth_probabilities(self) -> np.ndarray:
        """Per-cell regrowth probability from the current apple layout.

        Counts neighbors within the taxicab radius, excluding the cell
        itself, over the apple configuration as it stands right now.
        """
        apples = (self.state.cells == Cell.APPLE).astype(np.int64)
        counts = l1_neighbor_counts(apples, self.config.neighbor_radius)
        cap = max(self.config.regrowth_probs)
        lut = np.array([self.config.prob_for_count(i) for i in range(cap + 1)])
        probs = lut[np.minimum(counts, cap)]
        eligible = self.state.apple_capable.astype(bool) & (self.state.cells == Cell.EMPTY)
        return np.where(eligible, probs, 0.0)

    def _dynamics_phase(self, rewards, info) -> None:
        state = self.state
        # all draws use the pre-regrowth apple layout: new apples this step
        # do not feed each other
        probs = self.regrowth_probabilities()
        open_cells = self._unoccupied(probs > 0.0)
        coords = np.argwhere(open_cells)
        if len(coords):
            draws = state.rng.random(len(coords))
            for (r, c), u in zip(coords, draws):
                if u < probs[r, c]:
                    state.cells[r, c] = Cell.APPLE
                    info["apples_spawned"] += 1
