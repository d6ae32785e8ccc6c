"""Learner: gradient correctness by finite differences, training contracts."""

import numpy as np
import pytest

from ssdlab import make_env
from ssdlab.envs.buttons import ButtonConfig
from ssdlab.errors import ConfigError, SsdlabError
from ssdlab.inequity import SELFISH, IAParams
from ssdlab.learner import (FAMILIES, LearnerConfig, LinearApproximator,
                            MLPApproximator, TabularApproximator, Trajectory,
                            act, advantage, build_approximator, build_nets,
                            evaluate, feature_size, featurize, gradient_step,
                            kstep_returns, load_params, policy_gradients,
                            save_params, softmax, train, trajectory_objective)


def button_env(episode_length=25):
    env = make_env("dictate",
                   config=ButtonConfig(kind="dictate", episode_length=episode_length))
    env.reset(seed=0)
    return env


def random_trajectory(rng, n_features, n_actions, steps=5):
    traj = Trajectory()
    for _ in range(steps):
        traj.append(rng.normal(size=n_features), int(rng.integers(n_actions)),
                    float(rng.normal()), 0.0)
    traj.bootstrap = float(rng.normal())
    return traj


# -- configuration and features -------------------------------------------------

def test_config_validation():
    for bad in (dict(backup_length=0), dict(discount=0.0), dict(discount=1.5),
                dict(learning_rate=0.0), dict(entropy_coeff=-0.1),
                dict(workers=0), dict(family="forest")):
        with pytest.raises(ConfigError):
            LearnerConfig(**bad)


def test_softmax_is_shift_invariant_and_normalized():
    logits = np.array([1.0, 2.0, 3.0])
    p = softmax(logits)
    assert p.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(softmax(logits + 100.0), p)
    huge = softmax(np.array([1000.0, 0.0]))
    assert np.isfinite(huge).all()
    assert huge[0] == pytest.approx(1.0)


def test_featurize_scales_pixels_and_traces():
    env = button_env()
    env.set_reward_traces([1.0, -2.0])
    obs = env.observations()[0]
    x = featurize(obs)
    assert x.shape == (feature_size(env),)
    pixels = x[:-2]
    assert pixels.min() >= 0.0 and pixels.max() <= 1.0
    np.testing.assert_allclose(x[-2:], [0.1, -0.2])
    # plain arrays pass through untouched
    np.testing.assert_array_equal(featurize(np.array([1.0, 2.0])), [1.0, 2.0])


# -- returns and advantages -------------------------------------------------------

def test_kstep_returns_backward_recursion():
    traj = Trajectory()
    for u in (1.0, 2.0, 3.0):
        traj.append(np.zeros(2), 0, u, 0.0)
    traj.bootstrap = 10.0
    returns = kstep_returns(traj, 0.9)
    np.testing.assert_allclose(returns, [12.52, 12.8, 12.0])


def test_advantage_subtracts_current_values():
    net = LinearApproximator(n_features=2, n_actions=3)
    params = net.get_params()
    params[-1] = 2.0  # constant value head
    net.set_params(params)
    traj = Trajectory()
    for u in (1.0, 2.0, 3.0):
        traj.append(np.zeros(2), 0, u, 0.0)
    traj.bootstrap = 10.0
    adv = advantage(net, traj, LearnerConfig(discount=0.9))
    np.testing.assert_allclose(adv, [10.52, 10.8, 10.0])


def test_single_step_no_bootstrap():
    traj = Trajectory()
    traj.append(np.zeros(2), 1, 5.0, 5.0)
    np.testing.assert_allclose(kstep_returns(traj, 0.99), [5.0])


def test_empty_trajectory_rejected():
    with pytest.raises(ConfigError):
        kstep_returns(Trajectory(), 0.99)


# -- gradient correctness ---------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_gradients_match_finite_differences(family):
    rng = np.random.default_rng(0)
    config = LearnerConfig(family=family, discount=0.9, backup_length=5,
                           hidden_size=8, tabular_capacity=16)
    net = build_approximator(config, n_features=6, n_actions=4,
                             rng=np.random.default_rng(42))
    net.set_params(rng.normal(scale=0.5, size=net.n_params))
    traj = random_trajectory(rng, 6, 4)

    returns = kstep_returns(traj, config.discount)
    advs = advantage(net, traj, config)
    grad = policy_gradients(net, traj, config)

    base = net.get_params()
    eps = 1e-6
    fd = np.empty_like(grad)
    for j in range(net.n_params):
        for sign, store in ((+1, "hi"), (-1, "lo")):
            probe = base.copy()
            probe[j] += sign * eps
            net.set_params(probe)
            value = trajectory_objective(net, traj, config, advs, returns)
            if store == "hi":
                hi = value
            else:
                lo = value
        fd[j] = (hi - lo) / (2 * eps)
    net.set_params(base)
    np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)


def test_zero_init_zero_reward_gradient_vanishes():
    # uniform policy maximizes the entropy bonus and every advantage is zero
    net = LinearApproximator(n_features=3, n_actions=4)
    traj = Trajectory()
    for _ in range(4):
        traj.append(np.ones(3), 2, 0.0, 0.0)
    grad = policy_gradients(net, traj, LearnerConfig())
    np.testing.assert_array_equal(grad, np.zeros(net.n_params))


def test_positive_advantage_raises_action_probability():
    net = LinearApproximator(n_features=1, n_actions=3)
    x = np.ones(1)
    before = softmax(net.forward(x)[0])[1]
    traj = Trajectory()
    traj.append(x, 1, 1.0, 1.0)
    gradient_step(net, traj, LearnerConfig(learning_rate=0.1, entropy_coeff=0.0))
    after = softmax(net.forward(x)[0])[1]
    assert after > before


def test_non_finite_rewards_raise():
    net = LinearApproximator(n_features=2, n_actions=2)
    traj = Trajectory()
    traj.append(np.zeros(2), 0, float("nan"), 0.0)
    with pytest.raises(SsdlabError, match="non-finite"):
        policy_gradients(net, traj, LearnerConfig())


# -- action sampling ---------------------------------------------------------------

def test_fresh_linear_policy_is_uniform():
    net = LinearApproximator(n_features=4, n_actions=4)
    rng = np.random.default_rng(0)
    x = np.ones(4)
    counts = np.zeros(4)
    draws = 40_000
    for _ in range(draws):
        counts[act(net, x, rng)] += 1
    np.testing.assert_allclose(counts / draws, 0.25, atol=0.012)


def test_saturated_logits_pin_the_action():
    net = LinearApproximator(n_features=2, n_actions=3)
    params = net.get_params()
    params[net.n_actions * net.n_features] = 60.0  # bias of action 0
    net.set_params(params)
    rng = np.random.default_rng(1)
    assert all(act(net, np.zeros(2), rng) == 0 for _ in range(200))


def test_act_is_deterministic_given_rng_state():
    net = LinearApproximator(n_features=2, n_actions=5)
    seq1 = [act(net, np.zeros(2), np.random.default_rng(9)) for _ in range(1)]
    seq2 = [act(net, np.zeros(2), np.random.default_rng(9)) for _ in range(1)]
    assert seq1 == seq2


# -- a learnable problem ------------------------------------------------------------

def test_bandit_finds_the_better_arm():
    # two actions, constant state: arm 0 pays 1, arm 1 pays nothing
    config = LearnerConfig(backup_length=1, learning_rate=0.1, family="linear",
                           entropy_coeff=0.01, value_loss_coeff=0.5)
    net = LinearApproximator(n_features=1, n_actions=2)
    rng = np.random.default_rng(0)
    x = np.ones(1)
    for _ in range(3000):
        a = act(net, x, rng)
        reward = 1.0 if a == 0 else 0.0
        traj = Trajectory()
        traj.append(x, a, reward, reward)
        gradient_step(net, traj, config)
    assert softmax(net.forward(x)[0])[0] > 0.99


# -- tabular specifics ---------------------------------------------------------------

def test_tabular_rows_are_claimed_in_arrival_order():
    net = TabularApproximator(n_features=2, n_actions=2, capacity=4)
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert net.state_index(a) == 0
    assert net.state_index(b) == 1
    assert net.state_index(a) == 0


def test_tabular_capacity_exhaustion_names_the_knob():
    net = TabularApproximator(n_features=1, n_actions=2, capacity=1)
    net.forward(np.array([1.0]))
    with pytest.raises(ConfigError, match="tabular_capacity"):
        net.forward(np.array([2.0]))


def test_tabular_states_are_independent():
    net = TabularApproximator(n_features=1, n_actions=2, capacity=4)
    x1, x2 = np.array([1.0]), np.array([2.0])
    net.forward(x1), net.forward(x2)
    traj = Trajectory()
    traj.append(x1, 0, 1.0, 1.0)
    before = net.forward(x2)
    gradient_step(net, traj, LearnerConfig(family="tabular"))
    after = net.forward(x2)
    np.testing.assert_array_equal(before[0], after[0])
    assert before[1] == after[1]


# -- checkpoints ----------------------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_checkpoint_round_trip(family):
    rng = np.random.default_rng(3)
    config = LearnerConfig(family=family, hidden_size=8, tabular_capacity=8)
    net = build_approximator(config, n_features=3, n_actions=4,
                             rng=np.random.default_rng(5))
    xs = [rng.normal(size=3) for _ in range(3)]
    for x in xs:
        net.forward(x)   # tabular: claim rows before perturbing
    net.set_params(rng.normal(size=net.n_params))
    path = f"/tmp/ckpt_{family}.npz"
    save_params(net, path)
    back = load_params(path)
    assert back.family == net.family
    np.testing.assert_array_equal(back.get_params(), net.get_params())
    for x in xs:
        logits_a, value_a, _ = net.forward(x)
        logits_b, value_b, _ = back.forward(x)
        np.testing.assert_array_equal(logits_a, logits_b)
        assert value_a == value_b


def test_checkpoint_rejects_foreign_and_stale_files(tmp_path):
    plain = tmp_path / "plain.npz"
    np.savez(plain, theta=np.zeros(3))
    with pytest.raises(SsdlabError, match="not a parameter checkpoint"):
        load_params(plain)
    stale = tmp_path / "stale.npz"
    np.savez(stale, version=np.int64(99), family="linear")
    with pytest.raises(SsdlabError, match="version 99"):
        load_params(stale)
    with pytest.raises(SsdlabError, match="unreadable"):
        load_params(tmp_path / "missing.npz")


def test_build_nets_reproducible_and_distinct():
    env = button_env()
    config = LearnerConfig(family="mlp", hidden_size=8)
    nets1 = build_nets(env, config, seed=7)
    nets2 = build_nets(env, config, seed=7)
    assert [n.checksum() for n in nets1] == [n.checksum() for n in nets2]
    assert nets1[0].checksum() != nets1[1].checksum()


# -- training loop -----------------------------------------------------------------

def run_training(workers, episodes=3, seed=11):
    env = button_env()
    config = LearnerConfig(workers=workers, backup_length=8)
    nets = build_nets(env, config, seed=seed)
    population = [(net, SELFISH) for net in nets]
    log = train(env, population, config, episodes=episodes, seed=seed)
    return nets, log


def test_train_log_structure():
    env = button_env()
    nets, log = run_training(workers=1)
    episodes = [r for r in log if r["type"] == "episode"]
    agents = [r for r in log if r["type"] == "agent"]
    assert len(episodes) == 3
    assert len(agents) == 3 * env.n_agents
    assert [r["episode"] for r in episodes] == [0, 1, 2]
    for r in agents:
        assert set(r) >= {"episode", "agent", "extrinsic_return",
                          "subjective_return", "param_checksum"}
        assert len(r["param_checksum"]) == 16


def test_train_is_deterministic_for_fixed_worker_count():
    for workers in (1, 2):
        nets_a, log_a = run_training(workers=workers)
        nets_b, log_b = run_training(workers=workers)
        assert [n.checksum() for n in nets_a] == [n.checksum() for n in nets_b]
        assert log_a == log_b


def test_selfish_subjective_return_equals_extrinsic():
    _, log = run_training(workers=1)
    for r in log:
        if r["type"] == "agent":
            assert r["subjective_return"] == pytest.approx(r["extrinsic_return"])


def test_zero_episodes_touch_nothing():
    env = button_env()
    config = LearnerConfig(workers=2)
    nets = build_nets(env, config, seed=0)
    before = [n.checksum() for n in nets]
    log = train(env, [(n, SELFISH) for n in nets], config, episodes=0)
    assert log == []
    assert [n.checksum() for n in nets] == before


def test_population_size_must_match():
    env = button_env()
    config = LearnerConfig()
    nets = build_nets(env, config, seed=0)
    with pytest.raises(ConfigError, match="population"):
        train(env, [(nets[0], SELFISH)], config, episodes=1)


def test_record_sink_streams_every_record():
    env = button_env()
    config = LearnerConfig(workers=2)
    nets = build_nets(env, config, seed=1)
    seen = []
    log = train(env, [(n, SELFISH) for n in nets], config, episodes=2,
                record_sink=seen.append)
    assert seen == log


def test_inequity_params_shape_subjective_returns():
    env = button_env()
    config = LearnerConfig(workers=1)
    nets = build_nets(env, config, seed=2)
    population = [(nets[0], IAParams(envy_weight=5.0, guilt_weight=0.0)),
                  (nets[1], SELFISH)]
    log = train(env, population, config, episodes=1, seed=2)
    rows = {r["agent"]: r for r in log if r["type"] == "agent"}
    assert rows[0]["subjective_return"] <= rows[0]["extrinsic_return"] + 1e-9
    assert rows[1]["subjective_return"] == pytest.approx(rows[1]["extrinsic_return"])


def test_evaluate_never_updates_parameters():
    env = button_env()
    config = LearnerConfig()
    nets = build_nets(env, config, seed=3)
    before = [n.checksum() for n in nets]
    log = evaluate(env, nets, SELFISH, episodes=2, seed=3)
    assert [n.checksum() for n in nets] == before
    assert len([r for r in log if r["type"] == "episode"]) == 2
