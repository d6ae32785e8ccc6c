"""Episode recording and replay verification.

A tape stores the actions, extrinsic rewards, and a per-step state digest of
one episode, plus everything needed to rebuild the environment. Actions are
stored rather than observations: replay re-simulates from the seed and
compares digests step by step, which is both a smaller format and a stronger
determinism check.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass

import numpy as np

from .engine import EngineConfig, state_digest
from .errors import ReplayError
from .metrics import EpisodeRecord, summarize

MAGIC = b"SSDLABRE"
REPLAY_VERSION = 1
DIGEST_BYTES = 8


@dataclass
class EpisodeTape:
    header: dict
    actions: np.ndarray   # (T, N) uint8
    rewards: np.ndarray   # (T, N) float64
    digests: list[bytes]  # one 8-byte digest per step
    metrics: dict

    @property
    def n_steps(self) -> int:
        return self.actions.shape[0]

    @property
    def n_agents(self) -> int:
        return self.actions.shape[1]


@dataclass
class ReplayReport:
    ok: bool
    steps_checked: int
    first_divergence: int | None
    detail: str


def record_episode(env, act_fn, seed: int, *, horizon: int | None = None,
                   config_hash: str = "") -> EpisodeTape:
    """Run one episode and capture it; ``act_fn(observations, env) -> actions``."""
    result = env.reset(seed=seed)
    obs = result.observations
    actions, rewards, digests = [], [], []
    infos = []
    while True:
        if horizon is not None and len(actions) >= horizon:
            break
        step_actions = [int(a) for a in act_fn(obs, env)]
        result = env.step(step_actions)
        actions.append(step_actions)
        rewards.append(result.extrinsic_rewards.copy())
        digests.append(state_digest(env.state))
        infos.append(result.info)
        obs = result.observations
        if result.done:
            break
    rewards_arr = (np.array(rewards, dtype=np.float64)
                   if rewards else np.zeros((0, env.n_agents)))
    record = EpisodeRecord.from_steps(env.id, rewards_arr, infos)
    header = {
        "version": REPLAY_VERSION,
        "env": env.id,
        "n_agents": env.n_agents,
        "seed": int(seed),
        "config_hash": config_hash,
        "map_text": env.map_text,
        "env_config": dataclasses.asdict(env.config),
        "engine_config": dataclasses.asdict(env.engine_config),
    }
    # normalize through JSON once so the in-memory header equals the reloaded one
    header = json.loads(json.dumps(header, sort_keys=True))
    return EpisodeTape(
        header=header,
        actions=np.array(actions, dtype=np.uint8).reshape(len(actions), env.n_agents),
        rewards=rewards_arr,
        digests=digests,
        metrics=summarize(record) if rewards else {},
    )


def save_tape(tape: EpisodeTape, path) -> None:
    header_bytes = json.dumps(tape.header, sort_keys=True).encode("utf-8")
    metrics_bytes = json.dumps(tape.metrics, sort_keys=True).encode("utf-8")
    t, n = tape.actions.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", REPLAY_VERSION, len(header_bytes), 0))
        fh.write(header_bytes)
        fh.write(struct.pack("<II", t, n))
        fh.write(tape.actions.astype("<u1").tobytes())
        fh.write(tape.rewards.astype("<f8").tobytes())
        fh.write(b"".join(tape.digests))
        fh.write(struct.pack("<I", len(metrics_bytes)))
        fh.write(metrics_bytes)


def load_tape(path) -> EpisodeTape:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ReplayError(f"cannot read replay log {path}: {exc.strerror}") from exc
    if len(raw) < len(MAGIC) + 12 or raw[:len(MAGIC)] != MAGIC:
        raise ReplayError(f"{path} is not a replay log (bad magic)")
    off = len(MAGIC)
    version, header_len, _ = struct.unpack_from("<III", raw, off)
    off += 12
    if version != REPLAY_VERSION:
        raise ReplayError(
            f"replay log version {version} unsupported (expected {REPLAY_VERSION})")
    try:
        header = json.loads(raw[off:off + header_len].decode("utf-8"))
        off += header_len
        t, n = struct.unpack_from("<II", raw, off)
        off += 8
        actions = np.frombuffer(raw, dtype="<u1", count=t * n, offset=off)
        actions = actions.reshape(t, n).copy()
        off += t * n
        rewards = np.frombuffer(raw, dtype="<f8", count=t * n, offset=off)
        rewards = rewards.reshape(t, n).copy()
        off += t * n * 8
        digests = [raw[off + i * DIGEST_BYTES:off + (i + 1) * DIGEST_BYTES]
                   for i in range(t)]
        off += t * DIGEST_BYTES
        (metrics_len,) = struct.unpack_from("<I", raw, off)
        off += 4
        metrics = json.loads(raw[off:off + metrics_len].decode("utf-8"))
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise ReplayError(f"replay log {path} is truncated or corrupt: {exc}") from exc
    return EpisodeTape(header, actions, rewards, digests, metrics)


def rebuild_env(header: dict):
    """Reconstruct the recorded environment from a tape header."""
    from .envs import make_env
    from .envs.buttons import ButtonConfig
    from .envs.cleanup import CleanupConfig
    from .envs.harvest import HarvestConfig

    env_id = header["env"]
    cfg_dict = dict(header["env_config"])
    if env_id == "cleanup":
        config = CleanupConfig(**cfg_dict)
    elif env_id == "harvest":
        cfg_dict["regrowth_probs"] = {int(k): float(v)
                                      for k, v in cfg_dict["regrowth_probs"].items()}
        config = HarvestConfig(**cfg_dict)
    else:
        config = ButtonConfig(**cfg_dict)
    eng_dict = dict(header["engine_config"])
    eng_dict["window_center"] = tuple(eng_dict["window_center"])
    return make_env(env_id, config=config, map_text=header["map_text"],
                    n_agents=header["n_agents"],
                    engine_config=EngineConfig(**eng_dict))


def verify_tape(tape: EpisodeTape) -> ReplayReport:
    """Re-simulate the tape and compare state digests step by step."""
    try:
        env = rebuild_env(tape.header)
    except (KeyError, TypeError) as exc:
        return ReplayReport(False, 0, None, f"header does not describe an environment: {exc}")
    env.reset(seed=tape.header["seed"])
    for t in range(tape.n_steps):
        if env.done:
            return ReplayReport(False, t, t,
                                f"episode terminated at step {t} but tape has "
                                f"{tape.n_steps} steps")
        result = env.step([int(a) for a in tape.actions[t]])
        digest = state_digest(env.state)
        if digest != tape.digests[t]:
            return ReplayReport(False, t, t,
                                f"state digest diverged at step {t}")
        if not np.array_equal(result.extrinsic_rewards, tape.rewards[t]):
            return ReplayReport(False, t, t,
                                f"rewards diverged at step {t}")
    return ReplayReport(True, tape.n_steps, None,
                        f"replayed {tape.n_steps} steps with identical digests")


def verify_file(path) -> ReplayReport:
    return verify_tape(load_tape(path))
