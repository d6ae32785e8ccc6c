"""Deterministic seedable 2D gridworld substrate.

Cells and agent bodies live on separate layers: ``GridState.cells`` holds
terrain/items, agents overlay it. All randomness flows through the single
``GridState.rng`` generator, so identical seeds and action sequences produce
bit-identical trajectories.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ConfigError, MapError
from .kernels import FORWARD, RIGHT, extract_window

# -- cell codes and observation palette --------------------------------------

class Cell(IntEnum):
    EMPTY = 0
    APPLE = 1
    WASTE = 2
    RIVER = 3
    WALL = 4
    SPAWN = 5
    BUTTON = 6
    # observation-layer only
    OTHER_AGENT = 7
    SELF = 8


# Fixed color coding for the 3 observation channels, one row per Cell code.
PALETTE = np.array([
    (0, 0, 0),        # EMPTY
    (0, 255, 0),      # APPLE
    (128, 64, 0),     # WASTE
    (0, 0, 255),      # RIVER
    (128, 128, 128),  # WALL
    (16, 16, 16),     # SPAWN
    (255, 255, 0),    # BUTTON
    (255, 0, 0),      # OTHER_AGENT
    (255, 255, 255),  # SELF
], dtype=np.uint8)

MAP_LEGEND = {
    "#": Cell.WALL,
    ".": Cell.EMPTY,
    "P": Cell.SPAWN,
    "A": Cell.APPLE,
    "f": Cell.EMPTY,   # apple-capable field cell, currently empty
    "R": Cell.RIVER,
    "W": Cell.WASTE,
    "B": Cell.BUTTON,
}


class Action(IntEnum):
    NOOP = 0
    FORWARD = 1
    BACKWARD = 2
    STEP_LEFT = 3
    STEP_RIGHT = 4
    ROTATE_LEFT = 5
    ROTATE_RIGHT = 6
    FIRE_FINE = 7
    FIRE_CLEAN = 8


MOVE_ACTIONS = (Action.FORWARD, Action.BACKWARD, Action.STEP_LEFT, Action.STEP_RIGHT)


@dataclass
class EngineConfig:
    """Geometry knobs for observation windows and beams."""
    window_height: int = 15
    window_width: int = 15
    window_center: tuple[int, int] = (7, 7)  # agent's (row, col) inside the window
    beam_length: int = 5


@dataclass
class AgentBody:
    id: int
    position: tuple[int, int]
    orientation: int = 0  # 0=N 1=E 2=S 3=W
    frozen_until: int = 0


@dataclass
class GridState:
    width: int
    height: int
    cells: np.ndarray                 # int8 (height, width) of Cell codes
    agents: list[AgentBody]
    step: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    # static capability masks derived from the map text
    river_mask: np.ndarray = None     # cells that belong to the river (RIVER or WASTE)
    apple_capable: np.ndarray = None  # cells where apples may (re)appear

    def reseed(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def copy(self) -> "GridState":
        import copy as _copy
        return GridState(
            width=self.width,
            height=self.height,
            cells=self.cells.copy(),
            agents=[AgentBody(a.id, a.position, a.orientation, a.frozen_until)
                    for a in self.agents],
            step=self.step,
            rng=_copy.deepcopy(self.rng),
            river_mask=self.river_mask,
            apple_capable=self.apple_capable,
        )

    def agent_at(self, position: tuple[int, int]) -> AgentBody | None:
        for a in self.agents:
            if a.position == position:
                return a
        return None


@dataclass
class Observation:
    """One agent's egocentric view plus everyone's smoothed-reward values."""
    window: np.ndarray            # uint8 (win_h, win_w, 3)
    smoothed_rewards: np.ndarray  # float64 (N,)


@dataclass
class BeamResult:
    kind: str
    cells: list[tuple[int, int]]
    hit_agents: list[int]
    waste_cells: list[tuple[int, int]]


# -- map loading --------------------------------------------------------------

def load_map(text: str) -> GridState:
    """Parse an ASCII map into a GridState.

    Format: first line ``WxH N`` (width, height, player count), then H rows of
    W legend characters. Agents are placed on spawn points in row-major order.
    """
    lines = text.splitlines()
    if not lines:
        raise MapError("empty map text")
    header = lines[0].split()
    try:
        dims, n_agents = header[0], int(header[1])
        w_str, h_str = dims.lower().split("x")
        width, height = int(w_str), int(h_str)
    except (IndexError, ValueError):
        raise MapError(f"line 1: header must be 'WxH N', got {lines[0]!r}") from None
    rows = lines[1:1 + height]
    if len(rows) < height:
        raise MapError(f"expected {height} map rows, found {len(rows)}")

    cells = np.zeros((height, width), dtype=np.int8)
    apple_capable = np.zeros((height, width), dtype=np.uint8)
    spawns: list[tuple[int, int]] = []
    for r, row in enumerate(rows):
        line_no = r + 2
        if len(row) != width:
            raise MapError(f"line {line_no}: row has {len(row)} chars, expected {width}")
        for c, ch in enumerate(row):
            if ch not in MAP_LEGEND:
                raise MapError(f"line {line_no}, column {c + 1}: unknown character {ch!r}")
            cells[r, c] = MAP_LEGEND[ch]
            if ch in ("A", "f"):
                apple_capable[r, c] = 1
            if ch == "P":
                spawns.append((r, c))

    if len(spawns) < n_agents:
        raise MapError(
            f"insufficient spawn points: map provides {len(spawns)}, need {n_agents}")

    agents = [AgentBody(i, spawns[i]) for i in range(n_agents)]
    river_mask = ((cells == Cell.RIVER) | (cells == Cell.WASTE)).astype(np.uint8)
    return GridState(width=width, height=height, cells=cells, agents=agents,
                     river_mask=river_mask, apple_capable=apple_capable)


# -- movement -----------------------------------------------------------------

def _move_delta(action: int, orientation: int) -> tuple[int, int]:
    f = FORWARD[orientation]
    r = RIGHT[orientation]
    if action == Action.FORWARD:
        return f[0], f[1]
    if action == Action.BACKWARD:
        return -f[0], -f[1]
    if action == Action.STEP_LEFT:
        return -r[0], -r[1]
    return r[0], r[1]


def resolve_moves(state: GridState, actions) -> GridState:
    """Resolve one tick of simultaneous movement and rotation in place.

    Two movers contesting one cell: uniform random winner (an agent staying
    on a cell always keeps it). Movement into a cell whose occupant fails to
    leave is blocked, so swap and ring conflicts leave everyone in place.
    """
    agents = state.agents
    if len(actions) != len(agents):
        raise ConfigError(f"got {len(actions)} actions for {len(agents)} agents")

    effective = []
    for agent, action in zip(agents, actions):
        effective.append(Action.NOOP if state.step < agent.frozen_until else Action(action))

    targets: dict[int, tuple[int, int]] = {}
    for agent, action in zip(agents, effective):
        pos = agent.position
        if action in MOVE_ACTIONS:
            dr, dc = _move_delta(action, agent.orientation)
            r, c = pos[0] + dr, pos[1] + dc
            blocked = (r < 0 or r >= state.height or c < 0 or c >= state.width
                       or state.cells[r, c] == Cell.WALL)
            targets[agent.id] = pos if blocked else (r, c)
        else:
            targets[agent.id] = pos

    # Contested cells: stationary claimant wins outright, otherwise a uniform
    # random mover wins. Losers revert to their own cell, which can create new
    # contests, so iterate to a fixpoint.
    while True:
        claims: dict[tuple[int, int], list[int]] = {}
        for agent in agents:
            claims.setdefault(targets[agent.id], []).append(agent.id)
        contested = {cell: ids for cell, ids in claims.items() if len(ids) > 1}
        if not contested:
            break
        for cell in sorted(contested):
            ids = sorted(contested[cell])
            stayers = [i for i in ids if targets[i] == agents[i].position]
            if stayers:
                winner = stayers[0]
            else:
                winner = ids[int(state.rng.integers(len(ids)))]
            for i in ids:
                if i != winner:
                    targets[i] = agents[i].position

    # Dependency pass: a mover needs its target cell vacated first. Cycles
    # (swaps, rings) never unblock and are cancelled.
    occupied = {a.position: a.id for a in agents}
    unresolved = [a.id for a in agents if targets[a.id] != a.position]
    moved = True
    while moved and unresolved:
        moved = False
        still = []
        for i in unresolved:
            cell = targets[i]
            if cell not in occupied:
                del occupied[agents[i].position]
                occupied[cell] = i
                agents[i].position = cell
                moved = True
            else:
                still.append(i)
        unresolved = still

    for agent, action in zip(agents, effective):
        if action == Action.ROTATE_LEFT:
            agent.orientation = (agent.orientation - 1) % 4
        elif action == Action.ROTATE_RIGHT:
            agent.orientation = (agent.orientation + 1) % 4

    return state


# -- beams ---------------------------------------------------------------------

def project_beam(state: GridState, agent_id: int, kind: str,
                 beam_length: int = 5) -> BeamResult:
    """Trace a width-1 beam from the cell in front of the agent.

    Walls stop the beam. A fine beam stops at (and reports) the first agent
    intersected; a clean beam passes over agents and reports every waste cell
    it crosses.
    """
    agent = state.agents[agent_id]
    dr, dc = FORWARD[agent.orientation]
    r, c = agent.position
    occupied = {a.position: a.id for a in state.agents if a.id != agent_id}
    cells: list[tuple[int, int]] = []
    hit_agents: list[int] = []
    waste_cells: list[tuple[int, int]] = []
    for _ in range(beam_length):
        r += dr
        c += dc
        if r < 0 or r >= state.height or c < 0 or c >= state.width:
            break
        if state.cells[r, c] == Cell.WALL:
            break
        cells.append((r, c))
        if state.cells[r, c] == Cell.WASTE:
            waste_cells.append((r, c))
        if kind == "fine" and (r, c) in occupied:
            hit_agents.append(occupied[(r, c)])
            break
    return BeamResult(kind=kind, cells=cells, hit_agents=hit_agents,
                      waste_cells=waste_cells)


# -- observation ---------------------------------------------------------------

def observe(state: GridState, agent_id: int, traces,
            config: EngineConfig | None = None) -> Observation:
    """Egocentric color-coded window, rotated so the agent faces up."""
    config = config or EngineConfig()
    agent = state.agents[agent_id]
    codes = state.cells.copy()
    for other in state.agents:
        codes[other.position] = Cell.SELF if other.id == agent_id else Cell.OTHER_AGENT
    window_codes = extract_window(
        codes, agent.position[0], agent.position[1], agent.orientation,
        config.window_height, config.window_width,
        config.window_center[0], config.window_center[1], np.int8(Cell.WALL))
    window = PALETTE[window_codes]
    return Observation(window=window,
                       smoothed_rewards=np.asarray(traces, dtype=np.float64).copy())


# -- state digest (replay verification) -----------------------------------------

def state_digest(state: GridState) -> bytes:
    """8-byte platform-independent digest of the dynamic simulation state."""
    h = hashlib.sha256()
    h.update(np.array([state.width, state.height, state.step],
                      dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(state.cells).tobytes())
    for a in state.agents:
        h.update(np.array([a.id, a.position[0], a.position[1],
                           a.orientation, a.frozen_until], dtype="<i8").tobytes())
    return h.digest()[:8]
