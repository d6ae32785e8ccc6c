"""Hand-coded policies that enforce cooperator/defector roles.

Empirical Schelling diagrams need populations with a pinned number of
cooperators. Training agents into those roles is expensive and noisy, so
these scripted policies enforce the roles directly: cleanup cooperators
patrol and fire the cleaning beam, defectors only ever harvest; harvest
cooperators refuse apples growing in depleted areas, defectors strip
everything. Each policy replans from the live grid every step.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .engine import Action, Cell, FORWARD
from .kernels import l1_neighbor_counts

# world direction index (0=N 1=E 2=S 3=W) -> egocentric move, by (dir - orientation) % 4
_MOVE_BY_DIFF = (Action.FORWARD, Action.STEP_RIGHT, Action.BACKWARD, Action.STEP_LEFT)


def _move_toward(orientation: int, world_dir: int) -> Action:
    return _MOVE_BY_DIFF[(world_dir - orientation) % 4]


def _turn_toward(orientation: int, world_dir: int) -> Action | None:
    diff = (world_dir - orientation) % 4
    if diff == 0:
        return None
    return Action.ROTATE_LEFT if diff == 3 else Action.ROTATE_RIGHT


def _bfs_step(state, start: tuple[int, int], targets: set) -> int | None:
    """World direction of the first move on a shortest path to any target.

    Walls and other agents block; a target cell counts as reachable even if
    occupied. Returns None when no target is reachable.
    """
    if not targets:
        return None
    blocked = {tuple(a.position) for a in state.agents} - {tuple(start)}
    height, width = state.cells.shape
    parent_dir = {tuple(start): None}
    queue = deque([tuple(start)])
    while queue:
        cell = queue.popleft()
        if cell in targets and cell != tuple(start):
            direction = parent_dir[cell]
            return direction
        r, c = cell
        for d in range(4):
            nr, nc = r + FORWARD[d][0], c + FORWARD[d][1]
            nxt = (nr, nc)
            if not (0 <= nr < height and 0 <= nc < width):
                continue
            if nxt in parent_dir or state.cells[nr, nc] == Cell.WALL:
                continue
            if nxt in blocked and nxt not in targets:
                continue
            parent_dir[nxt] = parent_dir[cell] if parent_dir[cell] is not None else d
            queue.append(nxt)
    return None


class ScriptedPolicy:
    def reset(self, env, agent_id: int) -> None:
        self.agent_id = agent_id

    def act(self, env) -> Action:
        raise NotImplementedError


class NoopPolicy(ScriptedPolicy):
    def act(self, env) -> Action:
        return Action.NOOP


class SequencePolicy(ScriptedPolicy):
    """Plays a fixed action list, then holds still."""

    def __init__(self, actions):
        self.actions = list(actions)

    def reset(self, env, agent_id: int) -> None:
        super().reset(env, agent_id)
        self._cursor = 0

    def act(self, env) -> Action:
        if self._cursor >= len(self.actions):
            return Action.NOOP
        action = self.actions[self._cursor]
        self._cursor += 1
        return action


class Harvester(ScriptedPolicy):
    """Walks to the nearest eligible apple; idles when there is none.

    ``min_neighbor_apples`` is the sustainability rule: an apple is eligible
    only if at least that many other apples grow within the taxicab radius,
    so a positive setting keeps depleted regions off-limits.
    """

    def __init__(self, min_neighbor_apples: int = 0, radius: int = 2):
        self.min_neighbor_apples = min_neighbor_apples
        self.radius = radius

    def _eligible_apples(self, env) -> set:
        apples = (env.state.cells == Cell.APPLE)
        if not apples.any():
            return set()
        if self.min_neighbor_apples > 0:
            counts = l1_neighbor_counts(apples.astype(np.int64), self.radius)
            apples = apples & (counts >= self.min_neighbor_apples)
        return {(int(r), int(c)) for r, c in np.argwhere(apples)}

    def act(self, env) -> Action:
        me = env.state.agents[self.agent_id]
        direction = _bfs_step(env.state, me.position, self._eligible_apples(env))
        if direction is None:
            return Action.NOOP
        return _move_toward(me.orientation, direction)


class GreedyHarvester(Harvester):
    """Defector: takes any apple, sustainability be damned."""

    def __init__(self):
        super().__init__(min_neighbor_apples=0)


class SustainableHarvester(Harvester):
    """Cooperator: only harvests where apples still pack densely.

    The default threshold restricts it to the well-stocked interior of a
    patch, so it stops long before a region is at risk and never touches
    stragglers.
    """

    def __init__(self, min_neighbor_apples: int = 5):
        super().__init__(min_neighbor_apples=min_neighbor_apples)


def _clean_shot_cells(state, beam_length: int) -> dict:
    """Cells from which the cleaning beam reaches waste: cell -> directions."""
    shots: dict[tuple[int, int], set[int]] = {}
    for r, c in np.argwhere(state.cells == Cell.WASTE):
        for d in range(4):
            dr, dc = FORWARD[d]
            for k in range(1, beam_length + 1):
                qr, qc = int(r - k * dr), int(c - k * dc)
                if not (0 <= qr < state.height and 0 <= qc < state.width):
                    break
                if state.cells[qr, qc] == Cell.WALL:
                    break
                shots.setdefault((qr, qc), set()).add(d)
    return shots


class CleanupCooperator(ScriptedPolicy):
    """Cleans the river whenever it is dirty enough, harvests otherwise."""

    def __init__(self, waste_threshold: float = 0.2):
        self.waste_threshold = waste_threshold
        self._harvest = GreedyHarvester()

    def reset(self, env, agent_id: int) -> None:
        super().reset(env, agent_id)
        self._harvest.reset(env, agent_id)

    def act(self, env) -> Action:
        apples_exist = bool((env.state.cells == Cell.APPLE).any())
        must_clean = env.waste_fraction() >= self.waste_threshold or not apples_exist
        if not must_clean:
            return self._harvest.act(env)

        me = env.state.agents[self.agent_id]
        shots = _clean_shot_cells(env.state, env.config.beam_length)
        if not shots:
            return self._harvest.act(env) if apples_exist else Action.NOOP
        here = tuple(me.position)
        if here in shots:
            turn = _turn_toward(me.orientation, min(shots[here]))
            return turn if turn is not None else Action.FIRE_CLEAN
        direction = _bfs_step(env.state, me.position, set(shots))
        if direction is None:
            return Action.NOOP
        return _move_toward(me.orientation, direction)
