"""Independent advantage actor-critic learners.

Each agent owns a small policy-and-value approximator over its egocentric
observation. Updates use k-step advantages computed on subjective rewards,
plain stochastic gradient ascent, and an entropy bonus. Agents never share
parameters or gradients; with several workers, gradients from parallel
environment copies are summed and applied synchronously between segments.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .engine import Observation
from .errors import ConfigError, SsdlabError
from .inequity import InequityPipeline, per_agent_params
from .metrics import EpisodeRecord, summarize

FAMILIES = ("tabular", "linear", "mlp")

# keeps reward-trace features on the same footing as the unit-scaled pixels
TRACE_FEATURE_SCALE = 0.1


@dataclass
class LearnerConfig:
    backup_length: int = 20
    discount: float = 0.99
    learning_rate: float = 0.01
    entropy_coeff: float = 0.01
    value_loss_coeff: float = 0.5
    workers: int = 4
    family: str = "linear"
    hidden_size: int = 32
    tabular_capacity: int = 4096

    def __post_init__(self):
        if self.backup_length < 1:
            raise ConfigError(f"backup_length must be >= 1, got {self.backup_length}")
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError(f"discount must be in (0,1], got {self.discount}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.entropy_coeff < 0 or self.value_loss_coeff < 0:
            raise ConfigError("entropy_coeff and value_loss_coeff must be >= 0")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")


def featurize(obs) -> np.ndarray:
    """Flatten an Observation into the approximator input vector."""
    if isinstance(obs, Observation):
        window = obs.window.astype(np.float64).ravel() / 255.0
        traces = obs.smoothed_rewards * TRACE_FEATURE_SCALE
        return np.concatenate([window, traces])
    return np.asarray(obs, dtype=np.float64)


def feature_size(env) -> int:
    cfg = env.engine_config
    return cfg.window_height * cfg.window_width * 3 + env.n_agents


# -- approximator families ----------------------------------------------------

class _FlatParamNet:
    """Shared plumbing: one flat parameter vector with named views."""

    def __init__(self, n_params: int):
        self.theta = np.zeros(n_params, dtype=np.float64)

    @property
    def n_params(self) -> int:
        return self.theta.shape[0]

    def get_params(self) -> np.ndarray:
        return self.theta.copy()

    def set_params(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != self.theta.shape:
            raise ConfigError(f"expected {self.theta.shape[0]} parameters, got {flat.shape}")
        self.theta[:] = flat

    def add_scaled(self, grad: np.ndarray, scale: float) -> None:
        self.theta += scale * grad

    def checksum(self) -> str:
        return hashlib.sha256(self.theta.tobytes()).hexdigest()[:16]

    def _check_input(self, x: np.ndarray) -> None:
        if x.shape != (self.n_features,):
            raise ConfigError(
                f"{type(self).__name__} expects input of shape ({self.n_features},), "
                f"got {x.shape}")


class LinearApproximator(_FlatParamNet):
    """Logits and value as affine functions of the features."""

    family = "linear"

    def __init__(self, n_features: int, n_actions: int):
        self.n_features = n_features
        self.n_actions = n_actions
        super().__init__(n_actions * n_features + n_actions + n_features + 1)
        f, a = n_features, n_actions
        self._w_pi = self.theta[:a * f].reshape(a, f)
        self._b_pi = self.theta[a * f:a * f + a]
        self._w_v = self.theta[a * f + a:a * f + a + f]
        self._b_v = self.theta[a * f + a + f:]

    def forward(self, x: np.ndarray):
        self._check_input(x)
        logits = self._w_pi @ x + self._b_pi
        value = float(self._w_v @ x + self._b_v[0])
        return logits, value, None

    def backward(self, x, cache, dlogits, dvalue, grad: np.ndarray) -> None:
        f, a = self.n_features, self.n_actions
        grad[:a * f] += np.outer(dlogits, x).ravel()
        grad[a * f:a * f + a] += dlogits
        grad[a * f + a:a * f + a + f] += dvalue * x
        grad[a * f + a + f] += dvalue


class MLPApproximator(_FlatParamNet):
    """One tanh hidden layer shared by the policy head and the value head."""

    family = "mlp"

    def __init__(self, n_features: int, n_actions: int, hidden_size: int = 32,
                 rng: np.random.Generator | None = None):
        self.n_features = n_features
        self.n_actions = n_actions
        self.hidden_size = hidden_size
        f, a, h = n_features, n_actions, hidden_size
        super().__init__(h * f + h + a * h + a + h + 1)
        cut1, cut2, cut3 = h * f, h * f + h, h * f + h + a * h
        cut4, cut5 = cut3 + a, cut3 + a + h
        self._w1 = self.theta[:cut1].reshape(h, f)
        self._b1 = self.theta[cut1:cut2]
        self._w2 = self.theta[cut2:cut3].reshape(a, h)
        self._b2 = self.theta[cut3:cut4]
        self._w3 = self.theta[cut4:cut5]
        self._b3 = self.theta[cut5:]
        self._cuts = (cut1, cut2, cut3, cut4, cut5)
        rng = rng or np.random.default_rng(0)
        self._w1[:] = rng.normal(scale=1.0 / np.sqrt(f), size=(h, f))
        self._w2[:] = rng.normal(scale=1.0 / np.sqrt(h), size=(a, h))
        self._w3[:] = rng.normal(scale=1.0 / np.sqrt(h), size=h)

    def forward(self, x: np.ndarray):
        self._check_input(x)
        hidden = np.tanh(self._w1 @ x + self._b1)
        logits = self._w2 @ hidden + self._b2
        value = float(self._w3 @ hidden + self._b3[0])
        return logits, value, hidden

    def backward(self, x, cache, dlogits, dvalue, grad: np.ndarray) -> None:
        hidden = cache
        cut1, cut2, cut3, cut4, cut5 = self._cuts
        dhidden = self._w2.T @ dlogits + dvalue * self._w3
        dpre = (1.0 - hidden * hidden) * dhidden
        grad[:cut1] += np.outer(dpre, x).ravel()
        grad[cut1:cut2] += dpre
        grad[cut2:cut3] += np.outer(dlogits, hidden).ravel()
        grad[cut3:cut4] += dlogits
        grad[cut4:cut5] += dvalue * hidden
        grad[cut5] += dvalue


class TabularApproximator(_FlatParamNet):
    """Independent logits and value per distinct observation.

    Observations are keyed by their exact byte pattern; new ones claim the
    next free row, so the parameter vector has a fixed size and layout.
    """

    family = "tabular"

    def __init__(self, n_features: int, n_actions: int, capacity: int = 4096):
        self.n_features = n_features
        self.n_actions = n_actions
        self.capacity = capacity
        super().__init__(capacity * (n_actions + 1))
        self._table = self.theta.reshape(capacity, n_actions + 1)
        self._index: dict[bytes, int] = {}

    def state_index(self, x: np.ndarray) -> int:
        key = np.ascontiguousarray(x).tobytes()
        idx = self._index.get(key)
        if idx is None:
            idx = len(self._index)
            if idx >= self.capacity:
                raise ConfigError(
                    f"tabular capacity {self.capacity} exhausted; raise tabular_capacity")
            self._index[key] = idx
        return idx

    def forward(self, x: np.ndarray):
        self._check_input(x)
        idx = self.state_index(x)
        row = self._table[idx]
        return row[:self.n_actions].copy(), float(row[self.n_actions]), idx

    def backward(self, x, cache, dlogits, dvalue, grad: np.ndarray) -> None:
        rows = grad.reshape(self.capacity, self.n_actions + 1)
        rows[cache, :self.n_actions] += dlogits
        rows[cache, self.n_actions] += dvalue


def build_approximator(config: LearnerConfig, n_features: int, n_actions: int,
                       rng: np.random.Generator | None = None):
    if config.family == "linear":
        return LinearApproximator(n_features, n_actions)
    if config.family == "mlp":
        return MLPApproximator(n_features, n_actions, config.hidden_size, rng)
    return TabularApproximator(n_features, n_actions, config.tabular_capacity)


def build_nets(env, config: LearnerConfig, seed: int) -> list:
    """One approximator per agent, sized for the environment."""
    n_actions = len(env.action_set())
    return [build_approximator(config, feature_size(env), n_actions,
                               rng=np.random.default_rng([seed, 900 + i]))
            for i in range(env.n_agents)]


# -- acting and advantage -----------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def act(net, obs, rng: np.random.Generator) -> int:
    """Sample an action index from the softmax policy."""
    x = featurize(obs)
    logits, _, _ = net.forward(x)
    return int(rng.choice(net.n_actions, p=softmax(logits)))


@dataclass
class Trajectory:
    """Up to k steps of one agent's experience plus the bootstrap value."""
    features: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    subjective: list = field(default_factory=list)
    extrinsic: list = field(default_factory=list)
    bootstrap: float = 0.0

    def append(self, x, action, u, r) -> None:
        self.features.append(x)
        self.actions.append(int(action))
        self.subjective.append(float(u))
        self.extrinsic.append(float(r))

    def __len__(self) -> int:
        return len(self.actions)


def kstep_returns(traj: Trajectory, discount: float) -> np.ndarray:
    """Discounted subjective returns bootstrapped from the stored tail value."""
    if len(traj) == 0:
        raise ConfigError("trajectory is empty")
    returns = np.empty(len(traj))
    running = traj.bootstrap
    for t in range(len(traj) - 1, -1, -1):
        running = traj.subjective[t] + discount * running
        returns[t] = running
    return returns


def advantage(net, traj: Trajectory, config: LearnerConfig) -> np.ndarray:
    """Per-step k-step advantage: bootstrapped return minus current value."""
    returns = kstep_returns(traj, config.discount)
    values = np.array([net.forward(x)[1] for x in traj.features])
    return returns - values


def policy_gradients(net, traj: Trajectory, config: LearnerConfig) -> np.ndarray:
    """Ascent gradient of the actor-critic objective over one trajectory.

    Advantages and return targets are treated as constants, the policy term
    uses the score function, the value head regresses on the k-step return,
    and the entropy bonus pushes logits toward uniform.
    """
    returns = kstep_returns(traj, config.discount)
    grad = np.zeros(net.n_params)
    for t, x in enumerate(traj.features):
        logits, value, cache = net.forward(x)
        probs = softmax(logits)
        adv = returns[t] - value
        dlogits = adv * (-probs)
        dlogits[traj.actions[t]] += adv
        if config.entropy_coeff > 0.0:
            logp = np.log(np.maximum(probs, 1e-300))
            entropy = -(probs * logp).sum()
            dlogits += config.entropy_coeff * probs * (-logp - entropy)
        dvalue = -2.0 * config.value_loss_coeff * (value - returns[t])
        if not (np.isfinite(dlogits).all() and np.isfinite(dvalue)):
            raise SsdlabError(f"non-finite gradient at trajectory step {t}")
        net.backward(x, cache, dlogits, dvalue, grad)
    if not np.isfinite(grad).all():
        raise SsdlabError("non-finite accumulated gradient")
    return grad


def trajectory_objective(net, traj: Trajectory, config: LearnerConfig,
                         advantages: np.ndarray, returns: np.ndarray) -> float:
    """Scalar objective whose gradient policy_gradients computes.

    ``advantages`` and ``returns`` must come from the parameter point being
    differentiated and stay fixed, exactly as the update treats them.
    """
    total = 0.0
    for t, x in enumerate(traj.features):
        logits, value, _ = net.forward(x)
        probs = softmax(logits)
        logp = np.log(np.maximum(probs, 1e-300))
        total += logp[traj.actions[t]] * advantages[t]
        total += config.entropy_coeff * -(probs * logp).sum()
        total -= config.value_loss_coeff * (value - returns[t]) ** 2
    return total


def gradient_step(net, traj: Trajectory, config: LearnerConfig):
    """Apply one gradient-ascent update in place; returns the net."""
    grad = policy_gradients(net, traj, config)
    net.add_scaled(grad, config.learning_rate)
    return net


# -- checkpoints ----------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_params(net, path) -> None:
    """Write an approximator checkpoint with a versioned header."""
    payload = {
        "version": np.int64(CHECKPOINT_VERSION),
        "family": np.str_(net.family),
        "n_features": np.int64(net.n_features),
        "n_actions": np.int64(net.n_actions),
        "theta": net.get_params(),
    }
    if net.family == "mlp":
        payload["hidden_size"] = np.int64(net.hidden_size)
    if net.family == "tabular":
        payload["capacity"] = np.int64(net.capacity)
        keys = sorted(net._index, key=net._index.get)
        payload["table_keys"] = (np.frombuffer(b"".join(keys), dtype=np.float64)
                                 .reshape(len(keys), net.n_features)
                                 if keys else np.zeros((0, net.n_features)))
    np.savez(path, **payload)


def load_params(path):
    """Rebuild an approximator from a checkpoint."""
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise SsdlabError(f"unreadable checkpoint {path}: {exc}") from exc
    with data:
        if "version" not in data:
            raise SsdlabError(f"{path} is not a parameter checkpoint")
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise SsdlabError(
                f"checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})")
        family = str(data["family"])
        nf, na = int(data["n_features"]), int(data["n_actions"])
        if family == "linear":
            net = LinearApproximator(nf, na)
        elif family == "mlp":
            net = MLPApproximator(nf, na, int(data["hidden_size"]))
        elif family == "tabular":
            net = TabularApproximator(nf, na, int(data["capacity"]))
            for row in data["table_keys"]:
                net.state_index(row)
        else:
            raise SsdlabError(f"checkpoint has unknown family {family!r}")
        net.set_params(data["theta"])
    return net


# -- training loop ------------------------------------------------------------

class _WorkerEpisode:
    """Mutable per-worker state while one episode is in flight."""

    def __init__(self, env, ias, intrinsic_delay, seed, episode):
        self.env = env
        self.episode = episode
        self.pipeline = InequityPipeline(ias, env.n_agents, intrinsic_delay)
        ep_seed = int(np.random.SeedSequence((seed, episode)).generate_state(1)[0])
        result = env.reset(seed=ep_seed)
        self.obs = result.observations
        self.rngs = [np.random.default_rng([seed, episode, i])
                     for i in range(env.n_agents)]
        self.done = False
        self.step_rewards: list[np.ndarray] = []
        self.step_infos: list[dict] = []
        self.subjective_totals = np.zeros(env.n_agents)

    def collect_segment(self, nets, config: LearnerConfig) -> list[Trajectory]:
        n = self.env.n_agents
        trajs = [Trajectory() for _ in range(n)]
        for _ in range(config.backup_length):
            if self.done:
                break
            xs = [featurize(o) for o in self.obs]
            actions = [act(nets[i], xs[i], self.rngs[i]) for i in range(n)]
            result = self.env.step(actions)
            u = self.pipeline.step(result.extrinsic_rewards)
            self.env.set_reward_traces(self.pipeline.traces)
            self.obs = self.env.observations()
            for i in range(n):
                trajs[i].append(xs[i], actions[i], u[i], result.extrinsic_rewards[i])
            self.step_rewards.append(result.extrinsic_rewards.copy())
            self.step_infos.append(result.info)
            self.subjective_totals += u
            self.done = result.done
        if not self.done:
            for i in range(n):
                trajs[i].bootstrap = nets[i].forward(featurize(self.obs[i]))[1]
        return trajs

    def finish_records(self, nets) -> list[dict]:
        record = EpisodeRecord.from_steps(self.env.id, np.array(self.step_rewards),
                                          self.step_infos)
        rows = [{"type": "episode", "episode": self.episode, "env": self.env.id,
                 **summarize(record)}]
        returns = record.returns
        for i in range(self.env.n_agents):
            rows.append({
                "type": "agent",
                "episode": self.episode,
                "agent": i,
                "extrinsic_return": float(returns[i]),
                "subjective_return": float(self.subjective_totals[i]),
                "apples_eaten": int(record.apples_eaten[i]),
                "waste_cleaned": int(record.waste_cleaned[i]),
                "fines_fired": int(record.fines_fired[i]),
                "fines_received": int(record.fines_received[i]),
                "param_checksum": nets[i].checksum(),
            })
        return rows


def train(env, population, config: LearnerConfig, episodes: int, seed: int = 0,
          intrinsic_delay: int = 0, record_sink=None) -> list[dict]:
    """Train independent learners; returns the structured training log.

    ``population`` is one (approximator, IAParams) pair per agent. Workers
    run separate environment copies on consecutive episodes; gradients are
    summed per agent across workers and applied between segments. With
    workers=1 the run is a deterministic function of the seed. When given,
    ``record_sink`` receives each log record as soon as its episode ends,
    so callers can flush partial results.
    """
    n = env.n_agents
    if len(population) != n:
        raise ConfigError(f"population size {len(population)} != {n} agents")
    nets = [p[0] for p in population]
    ias = per_agent_params([p[1] for p in population], n)
    envs = [env] + [env.fresh() for _ in range(config.workers - 1)]
    log: list[dict] = []

    next_episode = 0
    while next_episode < episodes:
        batch = min(config.workers, episodes - next_episode)
        running = [_WorkerEpisode(envs[w], ias, intrinsic_delay, seed,
                                  next_episode + w)
                   for w in range(batch)]
        next_episode += batch
        while any(not w.done for w in running):
            grads = [np.zeros(nets[i].n_params) for i in range(n)]
            for w in running:
                if w.done:
                    continue
                trajs = w.collect_segment(nets, config)
                for i in range(n):
                    if len(trajs[i]):
                        grads[i] += policy_gradients(nets[i], trajs[i], config)
            for i in range(n):
                nets[i].add_scaled(grads[i], config.learning_rate)
        for w in running:
            records = w.finish_records(nets)
            log.extend(records)
            if record_sink is not None:
                for record in records:
                    record_sink(record)
    return log


def evaluate(env, nets, ia_params, episodes: int, seed: int = 0) -> list[dict]:
    """Run episodes without learning; returns the same record format."""
    n = env.n_agents
    ias = per_agent_params(ia_params, n)
    log: list[dict] = []
    for episode in range(episodes):
        worker = _WorkerEpisode(env, ias, 0, seed, episode)
        while not worker.done:
            xs = [featurize(o) for o in worker.obs]
            actions = [act(nets[i], xs[i], worker.rngs[i]) for i in range(n)]
            result = env.step(actions)
            u = worker.pipeline.step(result.extrinsic_rewards)
            env.set_reward_traces(worker.pipeline.traces)
            worker.obs = env.observations()
            worker.step_rewards.append(result.extrinsic_rewards.copy())
            worker.step_infos.append(result.info)
            worker.subjective_totals += u
            worker.done = result.done
        log.extend(worker.finish_records(nets))
    return log
