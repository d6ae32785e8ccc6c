"""Command-line interface: dispatch, files, exit codes."""

import csv
import json

import numpy as np
import pytest

from ssdlab import Action, make_env
from ssdlab.cli import main
from ssdlab.envs.cleanup import CleanupConfig
from ssdlab.gametheory import SchellingDiagram, SSDVerdict
from ssdlab.replay import record_episode, save_tape

TRAIN_CONFIG = """\
[experiment]
env = dictate
episodes = 1
episode_length = 10
seed = 3

[learner]
workers = 1
backup_length = 5
"""


def write_config(tmp_path, text=TRAIN_CONFIG):
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return str(path)


def test_train_command_writes_bundle(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "run"
    assert main(["train", "--config", config, "--out", str(out)]) == 0
    assert "trained 1 episodes" in capsys.readouterr().out
    assert (out / "run.json").exists()
    assert (out / "metrics.csv").exists()
    assert (out / "agent_0.npz").exists()


def test_train_seed_override(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "seeded"
    assert main(["train", "--config", config, "--seed", "9",
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "run.json").read_text())
    assert manifest["seed"] == 9


def test_missing_config_is_a_runtime_error(tmp_path, capsys):
    missing = str(tmp_path / "absent.ini")
    assert main(["train", "--config", missing]) == 1
    assert "absent.ini" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["conquer"])
    assert exc.value.code == 2


def test_evaluate_command_uses_checkpoints(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "run"
    main(["train", "--config", config, "--out", str(out)])
    eval_out = tmp_path / "eval"
    code = main(["evaluate", "--config", config, "--checkpoints", str(out),
                 "--episodes", "2", "--out", str(eval_out)])
    assert code == 0
    with open(eval_out / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2


def test_evaluate_without_out_prints_episode_records(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "run"
    main(["train", "--config", config, "--out", str(out)])
    capsys.readouterr()
    code = main(["evaluate", "--config", config, "--checkpoints", str(out),
                 "--episodes", "1"])
    assert code == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    record = json.loads(line)
    assert record["type"] == "episode"


def test_evaluate_missing_checkpoint(tmp_path, capsys):
    config = write_config(tmp_path)
    code = main(["evaluate", "--config", config,
                 "--checkpoints", str(tmp_path / "empty")])
    assert code == 1
    assert "agent_0.npz" in capsys.readouterr().err


def test_theory_guilt_crossing(tmp_path, capsys):
    out = tmp_path / "theory"
    code = main(["theory", "--c", "1", "--d", "3", "--N", "4",
                 "--alpha", "2", "--out", str(out)])
    assert code == 0
    assert "crossing at x = 2" in capsys.readouterr().out
    assert (out / "theory_lines.csv").exists()


def test_theory_envy_crossing(capsys):
    code = main(["theory", "--c", "1", "--d", "3", "--N", "9",
                 "--beta", "0.5", "2"])
    assert code == 0
    assert "crossing at x = 3" in capsys.readouterr().out


def test_theory_invalid_weights_runtime_error(capsys):
    code = main(["theory", "--c", "1", "--d", "3", "--N", "9",
                 "--beta", "2", "0.5"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_theory_requires_exactly_one_transform():
    with pytest.raises(SystemExit) as exc:
        main(["theory", "--c", "1", "--d", "3", "--N", "4"])
    assert exc.value.code == 2


def test_buttons_command(tmp_path, capsys):
    out = tmp_path / "buttons"
    code = main(["buttons", "--env", "take", "--horizon", "5",
                 "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "selfish optimum 3" in text
    assert "dia: press preferred = True" in text
    assert (out / "buttons_take.csv").exists()


def test_schelling_command_wiring(tmp_path, capsys, monkeypatch):
    diagram = SchellingDiagram(2, [0.0, 3.0], [1.0, 4.0],
                               [0.01, 0.01], [0.01, 0.01])
    verdict = SSDVerdict(is_ssd=True, mutual_cooperation_beats_defection=True,
                         cooperation_beats_exploitation=True, fear=True,
                         greed=True, inconclusive=False)
    import ssdlab.harness as harness
    monkeypatch.setattr(harness, "scripted_schelling",
                        lambda env_id, episodes_per_point, seed: (diagram, verdict))
    out = tmp_path / "sch"
    code = main(["schelling", "--env", "cleanup", "--scripted",
                 "--episodes-per-point", "2", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "social dilemma = True" in printed
    assert (out / "schelling_cleanup.csv").exists()


def test_replay_roundtrip_and_tamper(tmp_path, capsys):
    env = make_env("cleanup", map_name="cleanup_mini",
                   config=CleanupConfig(episode_length=20))
    rng = np.random.default_rng(0)

    def walk(obs, env):
        return [int(rng.integers(7)) for _ in range(env.n_agents)]

    tape = record_episode(env, walk, seed=4)
    good = tmp_path / "good.rep"
    save_tape(tape, good)
    assert main(["replay", "--log", str(good)]) == 0
    assert "identical digests" in capsys.readouterr().out

    tape.actions[5, 0] = Action.ROTATE_LEFT if tape.actions[5, 0] else Action.FORWARD
    bad = tmp_path / "bad.rep"
    save_tape(tape, bad)
    assert main(["replay", "--log", str(bad)]) == 1
    assert "diverged at step 5" in capsys.readouterr().out


def test_replay_missing_file(tmp_path, capsys):
    assert main(["replay", "--log", str(tmp_path / "none.rep")]) == 1
    assert "none.rep" in capsys.readouterr().err
