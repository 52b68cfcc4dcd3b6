import json
import math
import os

import pytest

from saginsim import cli, runio

TINY_CONFIG = """\
# small scenario for command-line tests
seed = 0
n_aavs = 2
n_gds = 3
max_served = 2
horizon = 6
area_bounds = [-500.0, -500.0, 500.0, 500.0]
initial_aav_positions = [[-250.0, -250.0], [250.0, 250.0]]
"""

TINY_HYPER = [
    "--override", "hyper.batch_size=4",
    "--override", "hyper.warmup_steps=0",
    "--override", "hyper.n_policy_samples=4",
    "--override", "hyper.n_uniform_samples=2",
    "--override", "hyper.n_value_samples=2",
    "--override", "hyper.behavior_samples=2",
    "--override", "hyper.target_samples=2",
    "--override", "hyper.critic_widths=8",
    "--override", "hyper.actor_widths=8",
    "--override", "hyper.n_denoise=2",
]


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_CONFIG)
    return str(path)


def run_cli(argv):
    return cli.main(argv)


def check_run_outputs(out_dir, seeds, episodes):
    assert os.path.exists(os.path.join(out_dir, "manifest.json"))
    assert os.path.exists(os.path.join(out_dir, "config.resolved.toml"))
    for seed in seeds:
        seed_dir = os.path.join(out_dir, "seed%d" % seed)
        rows = runio.read_metrics_csv(os.path.join(seed_dir, "metrics.csv"))
        assert len(rows) == episodes
        assert [r["episode"] for r in rows] == list(range(episodes))
        for r in rows:
            assert math.isfinite(r["reward"])
            assert r["f2"] >= 0.0 and r["f3"] > 0.0
        meta, records = runio.read_events_jsonl(
            os.path.join(seed_dir, "events.jsonl"))
        assert meta["schema"] == runio.EVENTS_SCHEMA
        assert len(records) == episodes * 6  # horizon is 6 in the tiny config
        assert os.path.exists(os.path.join(seed_dir, "trajectories.csv"))
        assert os.path.exists(os.path.join(seed_dir, "energy.csv"))


def test_baseline_command(tmp_path, config_path):
    out = str(tmp_path / "base")
    code = run_cli(["baseline", "--algo", "random", "--config", config_path,
                    "--seed", "1,2", "--episodes", "2", "--out", out,
                    "--quiet"])
    assert code == 0
    check_run_outputs(out, [1, 2], 2)
    manifest = json.loads(
        open(os.path.join(out, "manifest.json"), encoding="utf-8").read())
    assert manifest["command"] == "baseline"
    assert manifest["algo"] == "random"
    assert manifest["seeds"] == [1, 2]


def test_baseline_greedy_and_mode_override(tmp_path, config_path):
    out = str(tmp_path / "greedy")
    code = run_cli(["baseline", "--algo", "greedy", "--config", config_path,
                    "--seed", "3", "--episodes", "1", "--mode", "dc_only",
                    "--out", out, "--quiet"])
    assert code == 0
    resolved = open(os.path.join(out, "config.resolved.toml"),
                    encoding="utf-8").read()
    assert 'mode = "dc_only"' in resolved
    manifest = json.loads(
        open(os.path.join(out, "manifest.json"), encoding="utf-8").read())
    assert manifest["mode"] == "dc_only"


def test_train_eval_export_pipeline(tmp_path, config_path):
    train_out = str(tmp_path / "train")
    code = run_cli(["train", "--config", config_path, "--seed", "0",
                    "--episodes", "1", "--out", train_out, "--quiet"]
                   + TINY_HYPER)
    assert code == 0
    check_run_outputs(train_out, [0], 1)
    ckpt = os.path.join(train_out, "seed0", "checkpoints", "final.npz")
    assert os.path.exists(ckpt)
    rows = runio.read_metrics_csv(
        os.path.join(train_out, "seed0", "metrics.csv"))
    assert "critic_loss" in rows[0] and "actor_loss" in rows[0]

    eval_out = str(tmp_path / "eval")
    # no hyper overrides on purpose: eval must rebuild the nets from the
    # architecture recorded inside the checkpoint, not from defaults
    code = run_cli(["eval", "--config", config_path, "--seed", "0",
                    "--episodes", "1", "--checkpoint", ckpt,
                    "--out", eval_out, "--quiet"])
    assert code == 0
    check_run_outputs(eval_out, [0], 1)

    export_out = str(tmp_path / "export")
    events = os.path.join(train_out, "seed0", "events.jsonl")
    code = run_cli(["export", "--events", events, "--out", export_out])
    assert code == 0
    for name in ("trajectories.csv", "energy.csv"):
        original = open(os.path.join(train_out, "seed0", name), "rb").read()
        regenerated = open(os.path.join(export_out, name), "rb").read()
        assert regenerated == original


def test_train_accepts_scenario_override(tmp_path, config_path):
    out = str(tmp_path / "ovr")
    code = run_cli(["train", "--config", config_path, "--seed", "0",
                    "--episodes", "1", "--out", out, "--quiet",
                    "--override", "horizon=4"] + TINY_HYPER)
    assert code == 0
    _, records = runio.read_events_jsonl(
        os.path.join(out, "seed0", "events.jsonl"))
    assert len(records) == 4
    resolved = open(os.path.join(out, "config.resolved.toml"),
                    encoding="utf-8").read()
    assert "horizon = 4" in resolved


def test_works_without_config_file(tmp_path):
    out = str(tmp_path / "noconf")
    code = run_cli(["baseline", "--algo", "random", "--seed", "0",
                    "--episodes", "1", "--out", out, "--quiet",
                    "--override", "horizon=3",
                    "--override", "n_aavs=2",
                    "--override", "n_gds=3",
                    "--override", "max_served=2",
                    "--override", "area_bounds=[-500.0, -500.0, 500.0, 500.0]",
                    "--override",
                    "initial_aav_positions=[[-250.0, -250.0], [250.0, 250.0]]"])
    assert code == 0
    rows = runio.read_metrics_csv(os.path.join(out, "seed0", "metrics.csv"))
    assert len(rows) == 1


def test_bad_override_returns_config_error(tmp_path, config_path):
    out = str(tmp_path / "bad")
    code = run_cli(["baseline", "--algo", "random", "--config", config_path,
                    "--seed", "0", "--episodes", "1", "--out", out, "--quiet",
                    "--override", "no_such_key=1"])
    assert code == 2
    code = run_cli(["baseline", "--algo", "random", "--config", config_path,
                    "--seed", "0", "--episodes", "1", "--out", out, "--quiet",
                    "--override", "not-a-pair"])
    assert code == 2


def test_missing_checkpoint_returns_failure(tmp_path, config_path):
    out = str(tmp_path / "evalbad")
    code = run_cli(["eval", "--config", config_path, "--seed", "0",
                    "--episodes", "1", "--checkpoint",
                    str(tmp_path / "nope.npz"), "--out", out, "--quiet"]
                   + TINY_HYPER)
    assert code == 1


def test_sweep_writes_summary(tmp_path, config_path, monkeypatch):
    monkeypatch.setattr(cli, "DENOISE_GRID", (2,))
    out = str(tmp_path / "sweep")
    code = run_cli(["sweep", "--kind", "denoise", "--config", config_path,
                    "--seed", "0", "--episodes", "1", "--out", out, "--quiet"]
                   + TINY_HYPER)
    assert code == 0
    summary = runio.read_metrics_csv(os.path.join(out, "summary.csv"))
    assert len(summary) == 1
    assert summary[0]["sweep"] == "denoise"
    assert summary[0]["value"] == 2
    assert os.path.exists(os.path.join(out, "denoise2", "seed0",
                                       "metrics.csv"))


def test_capacity_sweep_overrides_scenario(tmp_path, config_path, monkeypatch):
    monkeypatch.setattr(cli, "CAPACITY_GRID", (1,))
    out = str(tmp_path / "capsweep")
    code = run_cli(["sweep", "--kind", "capacity", "--config", config_path,
                    "--seed", "0", "--episodes", "1", "--out", out, "--quiet"]
                   + TINY_HYPER)
    assert code == 0
    resolved = open(os.path.join(out, "manifest.json"), encoding="utf-8").read()
    assert json.loads(resolved)["command"] == "sweep"
    assert os.path.exists(os.path.join(out, "capacity1", "seed0",
                                       "metrics.csv"))
