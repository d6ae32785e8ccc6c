"""Experiment orchestration: seeded runs, scripted analyses, result files.

Ties the environments, inequity pipeline, learners, and game-theoretic
analyses together behind a few entry points the CLI dispatches to. Every
run writes results incrementally, so a crash still leaves a training log
plus a manifest marking the run as failed.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .engine import Action
from .envs import make_env
from .envs.buttons import KINDS as BUTTON_KINDS
from .envs.cleanup import CleanupConfig
from .envs.harvest import HarvestConfig
from .errors import ConfigError
from .gametheory import (SchellingDiagram, SSDVerdict, classify_ssd,
                         empirical_schelling, schelling_csv_rows)
from .inequity import IAParams, InequityPipeline
from .learner import build_nets, save_params, train
from .scripted import CleanupCooperator, GreedyHarvester, SequencePolicy, SustainableHarvester

METRIC_COLUMNS = ("episode", "env", "utilitarian", "equality", "sustainability",
                  "contribution", "total_apples", "negative_total_return")


@dataclass
class ExperimentResult:
    out_dir: str
    status: str
    config_hash: str
    training_log: list
    checkpoint_paths: list


def build_env(config: ExperimentConfig):
    """Environment named by the config, honoring its episode-length override."""
    env_config = None
    if config.episode_length is not None:
        if config.env_id == "cleanup":
            env_config = CleanupConfig(episode_length=config.episode_length)
        elif config.env_id == "harvest":
            env_config = HarvestConfig(episode_length=config.episode_length)
        else:
            from .envs.buttons import ButtonConfig
            env_config = ButtonConfig(kind=config.env_id,
                                      episode_length=config.episode_length)
    return make_env(config.env_id, config=env_config, map_name=config.map_name,
                    n_agents=config.n_agents)


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> ExperimentResult:
    """Train per the config and write the result bundle.

    Produces training_log.jsonl (flushed record by record), metrics.csv,
    one checkpoint per agent, and a run.json manifest. A mid-run failure
    still leaves the partial log plus a manifest with status "failed".
    """
    out_dir = out_dir or config.out_dir
    if out_dir is None:
        raise ConfigError("experiment.out is required (or pass an output directory)")
    os.makedirs(out_dir, exist_ok=True)

    env = build_env(config)
    nets = build_nets(env, config.learner, seed=config.seed)
    population = list(zip(nets, config.agent_params(env.n_agents)))

    log_path = os.path.join(out_dir, "training_log.jsonl")
    manifest = {
        "config_hash": config.config_hash,
        "env": env.id,
        "n_agents": env.n_agents,
        "episodes": config.episodes,
        "seed": config.seed,
        "intrinsic_delay": config.intrinsic_delay,
        "status": "running",
    }
    _write_json(os.path.join(out_dir, "run.json"), manifest)

    with open(log_path, "w", encoding="utf-8") as log_file:
        def sink(record):
            log_file.write(json.dumps(record, sort_keys=True) + "\n")
            log_file.flush()

        try:
            training_log = train(env, population, config.learner, config.episodes,
                                 seed=config.seed, intrinsic_delay=config.intrinsic_delay,
                                 record_sink=sink)
        except Exception as exc:
            manifest["status"] = "failed"
            manifest["error"] = f"{type(exc).__name__}: {exc}"
            _write_json(os.path.join(out_dir, "run.json"), manifest)
            raise

    write_metrics_csv(training_log, os.path.join(out_dir, "metrics.csv"))
    checkpoints = []
    for i, net in enumerate(nets):
        path = os.path.join(out_dir, f"agent_{i}.npz")
        save_params(net, path)
        checkpoints.append(path)
    manifest["status"] = "complete"
    manifest["records"] = len(training_log)
    _write_json(os.path.join(out_dir, "run.json"), manifest)
    return ExperimentResult(out_dir=out_dir, status="complete",
                            config_hash=config.config_hash,
                            training_log=training_log, checkpoint_paths=checkpoints)


def write_metrics_csv(training_log: list, path) -> None:
    """One row per episode; the contribution column is blank off-Cleanup."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for record in training_log:
            if record.get("type") == "episode":
                writer.writerow(record)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- scripted Schelling analysis ----------------------------------------------

def scripted_schelling(env_id: str, episodes_per_point: int = 20,
                       seed: int = 0) -> tuple[SchellingDiagram, SSDVerdict]:
    """Measure and classify a diagram with enforced scripted policies.

    Cooperation is enforced by construction: cooperator slots run the
    sustainable/cleaning scripts, defector slots the greedy harvester.
    """
    if env_id == "cleanup":
        env = make_env("cleanup", config=CleanupConfig(episode_length=150))
        cooperator, defector = lambda: CleanupCooperator(), GreedyHarvester
    elif env_id == "harvest":
        env = make_env("harvest", config=HarvestConfig(episode_length=1000))
        cooperator, defector = lambda: SustainableHarvester(), GreedyHarvester
    else:
        raise ConfigError(f"scripted Schelling analysis covers cleanup and harvest, "
                          f"not {env_id!r}")
    diagram = empirical_schelling(env, cooperator, defector,
                                  episodes_per_point=episodes_per_point, seed=seed)
    return diagram, classify_ssd(diagram)


def write_schelling_csv(diagram: SchellingDiagram, path) -> None:
    rows = schelling_csv_rows(diagram)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


# -- button games ---------------------------------------------------------------

_B, _F = Action.BACKWARD, Action.FORWARD
_L, _R = Action.STEP_LEFT, Action.STEP_RIGHT
_N = Action.NOOP

# hand-checked against the bundled maps: the presser eats part or all of its
# endowment, walks onto the button (press variant) or idles (no-press), while
# the other player's script is identical across the two variants
_BUTTON_SCRIPTS = {
    "dictate": {
        "press": {"presser": [_B, _B, _R, _B, _R, _R, _R, _F, _F],
                  "other": [_F] + [_N] * 7 + [_F, _L, _L]},
        "nopress": {"presser": [_B, _B, _R],
                    "other": [_F] + [_N] * 7 + [_F, _L, _L]},
    },
    "give": {
        "press": {"presser": [_B, _R, _R, _B, _L, _L, _R, _R, _R, _R, _F],
                  "other": [_N] * 10 + [_F, _L, _L, _B, _B, _B, _R, _R]},
        "nopress": {"presser": [_B, _R, _R, _B, _L, _L],
                    "other": [_N] * 10 + [_F, _L, _L, _B, _B, _B, _R, _R]},
    },
    "take": {
        "press": {"presser": [_B, _L, _F, _F, _L, _R, _R],
                  "other": [_N, _N, _B, _B, _R, _F, _R, _B]},
        "nopress": {"presser": [_F, _L, _L],
                    "other": [_N, _N, _B, _B, _R, _F, _R, _B]},
    },
}

BUTTON_CONDITIONS = {
    "selfish": IAParams(envy_weight=0.0, guilt_weight=0.0),
    "aia": IAParams(envy_weight=0.0, guilt_weight=0.05),
    "dia": IAParams(envy_weight=5.0, guilt_weight=0.0),
}

_PLAN_ACTIONS = (Action.NOOP, Action.FORWARD, Action.BACKWARD, Action.STEP_LEFT,
                 Action.STEP_RIGHT, Action.ROTATE_LEFT, Action.ROTATE_RIGHT)


def selfish_optimum(env, horizon: int, mode: str = "free") -> float:
    """Best total return the button holder can collect while the other idles.

    Exhaustive search over movement actions with memoization on the state
    digest (beams are omitted: fining only costs the firer here). ``mode``
    selects unrestricted play ("free"), play that may never stand on the
    button ("forbid"), or play that must press at least once ("force").
    """
    from .engine import state_digest

    env.reset(seed=0)
    presser = env.presser
    idle = [int(Action.NOOP)] * env.n_agents
    memo: dict = {}

    def best_from(steps_left: int, pressed: bool) -> float:
        if env.done or steps_left == 0:
            return 0.0 if (pressed or mode != "force") else -np.inf
        key = (state_digest(env.state), steps_left, pressed)
        if key in memo:
            return memo[key]
        snap = env.snapshot()
        best = -np.inf
        for action in _PLAN_ACTIONS:
            actions = list(idle)
            actions[presser] = int(action)
            result = env.step(actions)
            on_button = env.state.agents[presser].position == env.button_cell
            if mode == "forbid" and on_button:
                value = -np.inf
            else:
                value = (result.extrinsic_rewards[presser]
                         + best_from(steps_left - 1, pressed or on_button))
            env.restore(snap)
            best = max(best, value)
        memo[key] = best
        return best

    return float(best_from(horizon, False))


def _scripted_run(env, scripts: dict, params: IAParams, horizon: int = 100) -> dict:
    """Play the fixed scripts, then pad with no-ops to a shared horizon.

    The inequity penalty outlives the last reward through the traces, so the
    comparison between two trajectories sums subjective rewards over the same
    fixed horizon regardless of when the episode itself terminates.
    """
    policies = [None, None]
    policies[env.presser] = SequencePolicy(scripts["presser"])
    policies[env.other] = SequencePolicy(scripts["other"])
    env.reset(seed=0)
    for i, policy in enumerate(policies):
        policy.reset(env, i)
    pipeline = InequityPipeline(params, env.n_agents)
    extrinsic = np.zeros(env.n_agents)
    subjective = np.zeros(env.n_agents)
    presses = 0
    for _ in range(horizon):
        if env.done:
            u = pipeline.step(np.zeros(env.n_agents))
        else:
            result = env.step([int(p.act(env)) for p in policies])
            u = pipeline.step(result.extrinsic_rewards)
            extrinsic += result.extrinsic_rewards
            presses += int(result.info["buttons_pressed"][env.presser])
        subjective += u
    return {
        "presses": presses,
        "presser_extrinsic": float(extrinsic[env.presser]),
        "other_extrinsic": float(extrinsic[env.other]),
        "presser_subjective": float(subjective[env.presser]),
        "other_subjective": float(subjective[env.other]),
    }


def run_button_suite(env_id: str, horizon: int = 12) -> dict:
    """Selfish brute-force check plus scripted comparisons per condition.

    Returns the optimal-return analysis and, for each of the selfish, guilt
    (advantageous-aversion), and envy (disadvantageous-aversion) populations,
    the press and no-press trajectory statistics.
    """
    if env_id not in BUTTON_KINDS:
        raise ConfigError(f"button suite needs one of {BUTTON_KINDS}, got {env_id!r}")
    env = make_env(env_id)
    free = selfish_optimum(env, horizon, "free")
    forbid = selfish_optimum(env, horizon, "forbid")
    result = {
        "env": env_id,
        "horizon": horizon,
        "optimal_return": free,
        "press_free_return": forbid,
        "pressing_ever_helps": bool(free > forbid),
        "rows": [],
    }
    for condition, params in BUTTON_CONDITIONS.items():
        for variant in ("press", "nopress"):
            stats = _scripted_run(env, _BUTTON_SCRIPTS[env_id][variant], params)
            result["rows"].append({"env": env_id, "condition": condition,
                                   "variant": variant, **stats})

    by_key = {(r["condition"], r["variant"]): r for r in result["rows"]}
    def prefers_press(condition):
        return (by_key[(condition, "press")]["presser_subjective"]
                > by_key[(condition, "nopress")]["presser_subjective"])
    result["press_preferred"] = {c: prefers_press(c) for c in BUTTON_CONDITIONS}
    return result


def write_button_csv(result: dict, path) -> None:
    rows = result["rows"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def write_theory_csv(payoffs, transformed, path) -> None:
    """Sample the transformed payoff lines at every cooperator count."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cooperators", "cooperator_payoff", "defector_payoff",
                         "average_raw_return"])
        for x in range(payoffs.n_players + 1):
            writer.writerow([x,
                             float(transformed.cooperator_line(x)),
                             float(transformed.defector_line(x)),
                             float(payoffs.average_return(x))])
