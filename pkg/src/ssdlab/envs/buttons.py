"""Two-room button games: dictate, give, take.

Each player is sealed in its own room, so the only channel of interaction is
a button owned by one of them. Stepping onto the button cell activates it:

* dictate: every apple still uncollected in the button-holder's room is
  transported to the other room.
* give: a one-time batch of apples, equal to the other room's initial
  endowment, appears in the other room. The holder's own supply is untouched.
* take: every uncollected apple in the other room is removed from play.

The episode ends when no apples remain on the grid (removed apples count as
gone from play) or at the step cap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..engine import Cell
from ..errors import ConfigError, MapError
from .base import GridEnv

KINDS = ("dictate", "give", "take")


@dataclass
class ButtonConfig:
    kind: str
    episode_length: int = 100
    fine_cost: float = -1.0
    fine_penalty: float = -50.0
    beam_length: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown button game kind {self.kind!r}")
        if self.episode_length <= 0:
            raise ConfigError("episode_length must be positive")
        if not self.fine_penalty < self.fine_cost <= 0.0:
            raise ConfigError("need fine_penalty < fine_cost <= 0")


def _flood_room(cells: np.ndarray, start: tuple[int, int]) -> frozenset:
    """Cells reachable from start through non-wall cells (4-connected)."""
    height, width = cells.shape
    seen = {start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if (0 <= nr < height and 0 <= nc < width and (nr, nc) not in seen
                    and cells[nr, nc] != Cell.WALL):
                seen.add((nr, nc))
                queue.append((nr, nc))
    return frozenset(seen)


class ButtonGameEnv(GridEnv):
    has_clean_beam = False

    def __init__(self, map_text, config=None, n_agents=None, engine_config=None):
        if config is None:
            raise ConfigError("button games need a ButtonConfig naming the kind")
        super().__init__(map_text, config, n_agents=n_agents, engine_config=engine_config)
        self.id = config.kind
        if self.n_agents != 2:
            raise ConfigError(f"button games are two-player, got {self.n_agents}")

        self.rooms = [_flood_room(self.state.cells, a.position) for a in self.state.agents]
        if self.rooms[0] & self.rooms[1]:
            raise MapError("button-game rooms must be mutually unreachable")
        buttons = [(int(r), int(c)) for r, c in np.argwhere(self.state.cells == Cell.BUTTON)]
        if len(buttons) != 1:
            raise MapError(f"expected exactly one button cell, found {len(buttons)}")
        self.button_cell = buttons[0]
        owners = [i for i in range(2) if self.button_cell in self.rooms[i]]
        if len(owners) != 1:
            raise MapError("button must sit inside exactly one player's room")
        self.presser = owners[0]
        self.other = 1 - self.presser
        self._record_endowments()
        self._validate_endowments()

    # -- room bookkeeping --------------------------------------------------

    def room_apple_count(self, agent_id: int) -> int:
        cells = self.state.cells
        return sum(1 for p in self.rooms[agent_id] if cells[p] == Cell.APPLE)

    def _free_capable_cells(self, agent_id: int) -> list[tuple[int, int]]:
        """Row-major empty, unoccupied cells of the room where apples may sit."""
        cells = self.state.cells
        occupied = {a.position for a in self.state.agents}
        return [p for p in sorted(self.rooms[agent_id])
                if self.state.apple_capable[p] and cells[p] == Cell.EMPTY
                and p not in occupied]

    def _record_endowments(self) -> None:
        self.initial_endowments = (self.room_apple_count(0), self.room_apple_count(1))
        self._gave = False

    def _validate_endowments(self) -> None:
        mine = self.initial_endowments[self.presser]
        theirs = self.initial_endowments[self.other]
        kind = self.config.kind
        if kind == "dictate":
            if theirs != 0 or mine == 0:
                raise MapError("dictate maps put every apple in the button-holder's room")
            capacity = sum(1 for p in self.rooms[self.other] if self.state.apple_capable[p])
            if capacity < mine:
                raise MapError("recipient room cannot hold the transported apples")
        elif kind == "give":
            if theirs == 0 or mine != 2 * theirs:
                raise MapError("give maps endow the button-holder 2:1 over the other player")
            if len(self._free_capable_cells(self.other)) < theirs:
                raise MapError("recipient room cannot hold the gifted apples")
        else:  # take
            if mine == 0 or theirs != 2 * mine:
                raise MapError("take maps endow the other player 2:1 over the button-holder")

    # -- planning support ----------------------------------------------------

    def snapshot(self):
        """Full dynamic state; the button games are deterministic, so this
        plus restore() supports exhaustive search without copying the env."""
        agents = [(a.position, a.orientation, a.frozen_until)
                  for a in self.state.agents]
        return (self.state.cells.copy(), agents, self.state.step,
                self._done, self._gave)

    def restore(self, snap) -> None:
        cells, agents, step, done, gave = snap
        self.state.cells[:] = cells
        for body, (pos, orientation, frozen) in zip(self.state.agents, agents):
            body.position = pos
            body.orientation = orientation
            body.frozen_until = frozen
        self.state.step = step
        self._done = done
        self._gave = gave

    # -- episode dynamics ---------------------------------------------------

    def _init_episode(self) -> None:
        self._record_endowments()

    def _dynamics_phase(self, rewards, info) -> None:
        if self.state.agents[self.presser].position != self.button_cell:
            return
        info["buttons_pressed"][self.presser] += 1
        cells = self.state.cells
        kind = self.config.kind
        if kind == "dictate":
            free = self._free_capable_cells(self.other)
            apples = [p for p in sorted(self.rooms[self.presser]) if cells[p] == Cell.APPLE]
            for src, dst in zip(apples, free):
                cells[src] = Cell.EMPTY
                cells[dst] = Cell.APPLE
        elif kind == "give":
            if not self._gave:
                self._gave = True
                gift = self.initial_endowments[self.other]
                for dst in self._free_capable_cells(self.other)[:gift]:
                    cells[dst] = Cell.APPLE
        else:  # take
            for p in sorted(self.rooms[self.other]):
                if cells[p] == Cell.APPLE:
                    cells[p] = Cell.EMPTY

    def _episode_over(self) -> bool:
        apples_left = bool((self.state.cells == Cell.APPLE).any())
        return (not apples_left) or self.state.step >= self.config.episode_length
