"""Cleanup: a public-goods game.

Apples spawn in the field only while the river is clean enough; waste
accumulates in the river until it saturates. Episodes start just past the
saturation point, so nobody earns anything until someone cleans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..engine import Cell
from ..errors import ConfigError
from .base import GridEnv


@dataclass
class CleanupConfig:
    waste_spawn_prob: float = 0.5
    waste_saturation_fraction: float = 0.40
    apple_spawn_coeff: float = 0.125
    episode_length: int = 1000
    fine_cost: float = -1.0
    fine_penalty: float = -50.0
    beam_length: int = 5

    def __post_init__(self):
        if not 0.0 <= self.waste_spawn_prob <= 1.0:
            raise ConfigError(f"waste_spawn_prob must be in [0,1], got {self.waste_spawn_prob}")
        if not 0.0 < self.waste_saturation_fraction <= 1.0:
            raise ConfigError("waste_saturation_fraction must be in (0,1]")
        if not 0.0 <= self.apple_spawn_coeff <= 1.0:
            raise ConfigError("apple_spawn_coeff must be in [0,1]")
        if self.episode_length <= 0:
            raise ConfigError("episode_length must be positive")
        if not self.fine_penalty < self.fine_cost <= 0.0:
            raise ConfigError("need fine_penalty < fine_cost <= 0")


class CleanupEnv(GridEnv):
    id = "cleanup"
    has_clean_beam = True

    def __init__(self, map_text, config=None, n_agents=None, engine_config=None):
        super().__init__(map_text, config or CleanupConfig(),
                         n_agents=n_agents, engine_config=engine_config)
        if not self.state.river_mask.any():
            raise ConfigError("cleanup map has no river cells")

    # river bookkeeping ----------------------------------------------------

    def river_size(self) -> int:
        return int(self.state.river_mask.sum())

    def waste_fraction(self) -> float:
        waste = np.count_nonzero(self.state.cells[self.state.river_mask.astype(bool)]
                                 == Cell.WASTE)
        return waste / self.river_size()

    def cleanliness(self) -> float:
        """Linear apple-spawn gate: 1 when spotless, 0 at/after saturation."""
        return max(0.0, 1.0 - self.waste_fraction() / self.config.waste_saturation_fraction)

    def apple_spawn_probability(self) -> float:
        """Per-cell per-step spawn probability for empty field cells."""
        return self.config.apple_spawn_coeff * self.cleanliness()

    # episode dynamics -------------------------------------------------------

    def _init_episode(self) -> None:
        # Waste count = smallest count strictly past saturation: the episode
        # opens with the apple-spawn gate exactly closed.
        cells = self.state.cells
        river = self.state.river_mask.astype(bool)
        cells[river] = Cell.RIVER
        size = self.river_size()
        target = math.floor(self.config.waste_saturation_fraction * size) + 1
        target = min(target, size)
        coords = np.argwhere(river)
        picks = self.state.rng.choice(len(coords), size=target, replace=False)
        for idx in picks:
            cells[tuple(coords[idx])] = Cell.WASTE

    def _dynamics_phase(self, rewards, info) -> None:
        state = self.state
        cfg = self.config
        river = state.river_mask.astype(bool)

        # waste regeneration: one cell per step at most, silent at saturation
        if self.waste_fraction() < cfg.waste_saturation_fraction:
            clean = np.argwhere(river & (state.cells == Cell.RIVER))
            if len(clean) and state.rng.random() < cfg.waste_spawn_prob:
                pick = clean[int(state.rng.integers(len(clean)))]
                state.cells[tuple(pick)] = Cell.WASTE
                info["waste_spawned"] = 1

        # apple regeneration, gated by river cleanliness after waste regen
        prob = self.apple_spawn_probability()
        if prob > 0.0:
            open_cells = self._unoccupied(
                self.state.apple_capable.astype(bool) & (state.cells == Cell.EMPTY))
            coords = np.argwhere(open_cells)
            if len(coords):
                draws = state.rng.random(len(coords))
                for (r, c), u in zip(coords, draws):
                    if u < prob:
                        state.cells[r, c] = Cell.APPLE
                        info["apples_spawned"] += 1
