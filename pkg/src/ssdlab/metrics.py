"""Social outcome metrics computed from episode event logs.

All metrics read extrinsic rewards only; subjective utilities never enter
here. Reward timesteps are 1-indexed: a reward earned on the first step of
the episode counts as time 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StatisticsError


@dataclass
class EpisodeRecord:
    """Everything one episode produced that the metrics consume."""
    env_id: str
    rewards: np.ndarray                 # float64 (T, N) extrinsic rewards
    waste_cleaned: np.ndarray = None    # int64 (N,)
    apples_eaten: np.ndarray = None     # int64 (N,)
    fines_fired: np.ndarray = None      # int64 (N,)
    fines_received: np.ndarray = None   # int64 (N,)

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.rewards.ndim != 2:
            raise StatisticsError(f"rewards must be (T, N), got {self.rewards.shape}")
        n = self.rewards.shape[1]
        for name in ("waste_cleaned", "apples_eaten", "fines_fired", "fines_received"):
            value = getattr(self, name)
            value = np.zeros(n, dtype=np.int64) if value is None else np.asarray(value)
            if value.shape != (n,):
                raise StatisticsError(f"{name} must have shape ({n},), got {value.shape}")
            setattr(self, name, value)

    @classmethod
    def from_steps(cls, env_id: str, step_rewards, step_infos) -> "EpisodeRecord":
        """Assemble a record from per-step reward vectors and info dicts."""
        rewards = np.asarray(step_rewards, dtype=np.float64)
        n = rewards.shape[1] if rewards.ndim == 2 else 0
        sums = {k: np.zeros(n, dtype=np.int64)
                for k in ("waste_cleaned", "apples_eaten", "fines_fired", "fines_received")}
        for info in step_infos:
            for k in sums:
                sums[k] += info[k]
        return cls(env_id=env_id, rewards=rewards, **sums)

    @property
    def episode_length(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_agents(self) -> int:
        return self.rewards.shape[1]

    @property
    def returns(self) -> np.ndarray:
        return self.rewards.sum(axis=0)


def utilitarian(rec: EpisodeRecord) -> float:
    """Collective return per timestep."""
    if rec.episode_length == 0:
        raise StatisticsError("utilitarian metric needs at least one timestep")
    return float(rec.returns.sum() / rec.episode_length)


def equality(rec: EpisodeRecord) -> float:
    """One minus the Gini coefficient of episode returns.

    A zero total return is taken as perfectly equal. Negative totals produce
    out-of-range values; ``summarize`` flags them instead of hiding them.
    """
    returns = rec.returns
    total = returns.sum()
    if total == 0.0:
        return 1.0
    spread = np.abs(returns[:, None] - returns[None, :]).sum()
    return float(1.0 - spread / (2 * rec.n_agents * total))


def sustainability(rec: EpisodeRecord) -> float:
    """Average collection time: mean over agents of mean positive-reward step.

    Agents that never earned a positive reward are left out; if nobody did,
    the episode scores the maximum possible value T.
    """
    times = np.arange(1, rec.episode_length + 1, dtype=np.float64)
    per_agent = []
    for i in range(rec.n_agents):
        positive = rec.rewards[:, i] > 0
        if positive.any():
            per_agent.append(times[positive].mean())
    if not per_agent:
        return float(rec.episode_length)
    return float(np.mean(per_agent))


def contribution(rec: EpisodeRecord) -> float:
    """Total waste cells cleaned. Only the cleanup game defines this."""
    if rec.env_id != "cleanup":
        raise StatisticsError(f"contribution metric is undefined for {rec.env_id!r}")
    return float(rec.waste_cleaned.sum())


def summarize(rec: EpisodeRecord) -> dict:
    """All applicable metrics plus degeneracy flags, ready for CSV emission."""
    out = {
        "utilitarian": utilitarian(rec),
        "equality": equality(rec),
        "sustainability": sustainability(rec),
        "total_apples": int(rec.apples_eaten.sum()),
        "negative_total_return": bool(rec.returns.sum() < 0),
    }
    if rec.env_id == "cleanup":
        out["contribution"] = contribution(rec)
    return out
