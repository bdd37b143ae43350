import json
import logging
from pathlib import Path

import pandas as pd
import pytest
import yaml
from pydantic import ValidationError

from agent import NumericalAbortError
from cyberenv import CyberDefenseEnv, NoOpPolicy, PerfectDefensePolicy, get_network_spec, run_episode
from harness.cli import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ABORT, EXIT_OK, EXIT_REPORT_ERROR, main
from harness.config import (
    BASELINE_VARIANT,
    VARIANTS,
    ExperimentConfig,
    apply_overrides,
    dump_experiment_config,
    load_experiment_config,
    with_variant,
)
from harness.logging_config import HANDLER_NAME, configure_logging
from harness.report import compare_report
from harness.runner import run_batch, run_dir_for, run_lr_sweep, run_single
from harness.store import EPISODE_COLUMNS, UPDATE_COLUMNS, RunStore
from harness.validators import ConfigValidationError, validate_experiment_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def make_cfg(tiny_spec_path, tmp_path):
    """Tiny-network experiment; one rollout of n_steps=5 is exactly one episode."""

    def _make(policy="mlp", value="mlp", backend="exact", policy_extra=None, value_extra=None, **overrides):
        data = {
            "name": "t",
            "env": str(tiny_spec_path),
            "episodes": 2,
            "seeds": [0],
            "output_dir": str(tmp_path / "runs"),
            "ppo": {"n_steps": 5, "n_epochs": 2, "minibatch_size": 5, "learning_rate": 1e-3},
            "policy": {"kind": policy, "mlp_hidden": [8], "dbm_hidden": [2, 2], "backend": backend,
                       "sampler": {"num_reads": 10, "burn_in": 5}},
            "value": {"kind": value, "mlp_hidden": [8], "dbm_hidden": [2, 2], "backend": backend,
                      "sampler": {"num_reads": 10, "burn_in": 5}},
        }
        data["policy"].update(policy_extra or {})
        data["value"].update(value_extra or {})
        data.update(overrides)
        return ExperimentConfig.model_validate(data)

    return _make


# -- config -------------------------------------------------------------------

@pytest.mark.parametrize("name", ["default.yaml", "smoke.yaml", "sweep.yaml"])
def test_shipped_configs_validate(name):
    cfg = load_experiment_config(CONFIG_DIR / name)
    spec = validate_experiment_config(cfg, batch=True)
    assert spec.nodes


def test_default_config_runs_all_variants():
    cfg = load_experiment_config(CONFIG_DIR / "default.yaml")
    assert cfg.variants == list(VARIANTS)
    assert cfg.seeds == [0, 1, 2]
    assert cfg.variant == BASELINE_VARIANT


def test_unknown_config_key_is_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"name": "x", "ppo": {"learning_rate": 0.1, "lr_decay": 0.5}}))
    with pytest.raises(ValidationError):
        load_experiment_config(path)


def test_validators(make_cfg):
    with pytest.raises(ConfigValidationError, match="exact"):
        validate_experiment_config(make_cfg(policy="dbm", policy_extra={"dbm_hidden": [12, 12]}))
    with pytest.raises(ConfigValidationError, match="distinct"):
        validate_experiment_config(make_cfg(seeds=[1, 1]))
    with pytest.raises(ConfigValidationError, match="unknown variants"):
        validate_experiment_config(make_cfg(variants=["policy-rbm_value-mlp"]))
    with pytest.raises(ConfigValidationError):
        validate_experiment_config(make_cfg(env="nowhere"))


def test_batch_validation_checks_every_variant(make_cfg):
    big = make_cfg(value_extra={"dbm_hidden": [15, 15]})
    validate_experiment_config(big)
    with pytest.raises(ConfigValidationError, match="exact"):
        validate_experiment_config(big, batch=True)


def test_apply_overrides(make_cfg):
    cfg = apply_overrides(make_cfg(), seeds=[3, 4], backend="gibbs", episodes=7, trace=True, learning_rate=0.01)
    assert cfg.seeds == [3, 4]
    assert cfg.policy.backend == cfg.value.backend == "gibbs"
    assert cfg.episodes == 7
    assert cfg.trace
    assert cfg.ppo.learning_rate == 0.01
    assert with_variant(cfg, VARIANTS[3]).variant == VARIANTS[3]
    with pytest.raises(ValueError):
        with_variant(cfg, "policy-x_value-y")


# -- single runs ----------------------------------------------------------------

def test_one_episode_smoke_run(make_cfg, tmp_path):
    cfg = make_cfg(episodes=1)
    metrics = run_single(cfg, 0)
    run_dir = run_dir_for(cfg, 0)
    assert run_dir == tmp_path / "runs" / "t" / BASELINE_VARIANT / "seed-0"

    assert metrics.n_episodes == 1
    episodes = pd.read_csv(run_dir / "episodes.csv")
    assert list(episodes.columns) == EPISODE_COLUMNS
    assert len(episodes) == 1
    assert episodes.loc[0, "steps"] == 5
    assert pd.isna(episodes.loc[0, "ma5_reward"])
    assert list(pd.read_csv(run_dir / "updates.csv").columns) == UPDATE_COLUMNS

    metadata = json.loads((run_dir / "metadata.json").read_text())
    assert metadata["status"] == "finished"
    assert metadata["variant"] == BASELINE_VARIANT
    assert metadata["episodes_completed"] == 1
    assert (run_dir / "checkpoint.npz").exists()
    assert load_experiment_config(run_dir / "config.yaml") == cfg


def test_ma5_column_is_a_five_episode_average(make_cfg, tmp_path):
    cfg = make_cfg(episodes=6, plateau={"window": 3, "tolerance_frac": 0.05, "hold": 2})
    run_single(cfg, 0, tmp_path / "run")
    episodes = pd.read_csv(tmp_path / "run" / "episodes.csv")
    assert episodes["ma5_reward"].iloc[:4].isna().all()
    rewards = episodes["total_reward"]
    assert episodes.loc[4, "ma5_reward"] == pytest.approx(rewards.iloc[:5].mean())
    assert episodes.loc[5, "ma5_reward"] == pytest.approx(rewards.iloc[1:6].mean())


def test_runs_are_deterministic(make_cfg, tmp_path):
    cfg = make_cfg(policy="dbm", value="dbm", backend="gibbs", episodes=3)
    run_single(cfg, 0, tmp_path / "a")
    run_single(cfg, 0, tmp_path / "b")
    for name in ("episodes.csv", "updates.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sampler_counters_are_recorded(make_cfg, tmp_path):
    cfg = make_cfg(policy="dbm", value="mlp", episodes=2)
    metrics = run_single(cfg, 0, tmp_path / "run")
    updates = metrics.updates
    assert len(updates) == 2
    # 5 rollout steps plus 2 epochs over 5 samples, one sampler call per evaluation
    assert updates["policy_evaluations"].tolist() == [15, 15]
    assert updates["policy_sampler_calls"].tolist() == [15, 15]
    assert updates["value_sampler_calls"].tolist() == [0, 0]


def test_resume_matches_uninterrupted_run(make_cfg, tmp_path):
    full = make_cfg(policy="dbm", value="mlp", episodes=6)
    run_single(full, 0, tmp_path / "full")

    run_single(make_cfg(policy="dbm", value="mlp", episodes=3), 0, tmp_path / "resumed")
    run_single(full, 0, tmp_path / "resumed", resume=True)

    for name in ("episodes.csv", "updates.csv"):
        assert (tmp_path / "full" / name).read_bytes() == (tmp_path / "resumed" / name).read_bytes()
    assert RunStore(tmp_path / "resumed").read_metadata()["status"] == "finished"


def test_resume_without_checkpoint_starts_fresh(make_cfg, tmp_path):
    metrics = run_single(make_cfg(episodes=1), 0, tmp_path / "run", resume=True)
    assert metrics.n_episodes == 1


def test_trace_files(make_cfg, tmp_path):
    cfg = make_cfg(policy="dbm", episodes=2, trace=True)
    run_single(cfg, 0, tmp_path / "run")
    trace = pd.read_csv(tmp_path / "run" / "trace.csv")
    assert len(trace) == 10
    policy_trace = pd.read_csv(tmp_path / "run" / "policy_trace.csv")
    # one row per (step, action) with 8 actions on the tiny network
    assert len(policy_trace) == 10 * 8
    assert policy_trace.groupby("step")["probability"].sum().round(9).eq(1.0).all()


# -- batches and sweeps -----------------------------------------------------------

def test_four_variant_batch(make_cfg, tmp_path):
    cfg = make_cfg(seeds=[0, 1], episodes=2)
    results = run_batch(cfg)
    assert set(results) == {(v, s) for v in VARIANTS for s in (0, 1)}
    assert all(m.n_episodes == 2 and m.status == "finished" for m in results.values())
    for variant in VARIANTS:
        assert (tmp_path / "runs" / "t" / variant / "seed-1" / "metadata.json").exists()

    report = compare_report(list(results.values()))
    assert list(report.variants["variant"]) == list(VARIANTS)
    assert len(report.runs) == 8


def test_lr_sweep(make_cfg, tmp_path):
    cfg = make_cfg(episodes=1, learning_rate_sweep=[1e-3, 1e-2])
    df = run_lr_sweep(cfg)
    assert df["learning_rate"].tolist() == [1e-3, 1e-2]
    sweep_dir = tmp_path / "runs" / "t" / "sweep"
    assert (sweep_dir / "sweep.csv").exists()
    assert (sweep_dir / "lr-0.01" / BASELINE_VARIANT / "seed-0" / "episodes.csv").exists()
    with pytest.raises(ConfigValidationError):
        run_lr_sweep(make_cfg())


def test_configure_logging_installs_one_named_handler():
    root = logging.getLogger()
    before, level = list(root.handlers), root.level
    try:
        configure_logging("DEBUG")
        configure_logging("warning")
        assert [h.get_name() for h in root.handlers].count(HANDLER_NAME) == 1
        assert root.level == logging.WARNING
    finally:
        for handler in root.handlers[:]:
            if handler not in before:
                root.removeHandler(handler)
        root.setLevel(level)


# -- command line -------------------------------------------------------------------

@pytest.fixture
def config_file(make_cfg, tmp_path):
    return dump_experiment_config(make_cfg(episodes=1), tmp_path / "experiment.yaml")


def test_cli_validate(config_file, capsys):
    assert main(["validate", "--config", str(config_file)]) == EXIT_OK
    assert "is valid" in capsys.readouterr().out


def test_cli_config_errors(tmp_path, config_file):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: x\nepisodes: -3\n")
    assert main(["validate", "--config", str(bad)]) == EXIT_CONFIG_ERROR
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG_ERROR
    broken = tmp_path / "broken.yaml"
    broken.write_text("name: [unclosed\n")
    assert main(["validate", "--config", str(broken)]) == EXIT_CONFIG_ERROR
    with pytest.raises(SystemExit):
        main(["run", "--config", str(config_file), "--seed", "a,b"])


def test_cli_run_with_overrides(config_file, tmp_path):
    out = tmp_path / "elsewhere"
    assert main(["run", "--config", str(config_file), "--seed", "0,2", "--out", str(out), "--episodes", "2"]) == EXIT_OK
    for seed in (0, 2):
        episodes = pd.read_csv(out / "t" / BASELINE_VARIANT / f"seed-{seed}" / "episodes.csv")
        assert len(episodes) == 2


def test_cli_numerical_abort(config_file, tmp_path, monkeypatch):
    def exploding_update(agent, buffer, rng):
        raise NumericalAbortError("loss is not finite", {"update": 0, "loss": float("nan")})

    monkeypatch.setattr("harness.runner.ppo_update", exploding_update)
    assert main(["run", "--config", str(config_file)]) == EXIT_NUMERICAL_ABORT

    run_dir = tmp_path / "runs" / "t" / BASELINE_VARIANT / "seed-0"
    metadata = json.loads((run_dir / "metadata.json").read_text())
    assert metadata["status"] == "aborted"
    assert metadata["diagnostics"]["update"] == 0
    # the rollout finished before the update failed, so its episode is kept
    assert len(pd.read_csv(run_dir / "episodes.csv")) == 1


def test_cli_batch_and_report(make_cfg, tmp_path, capsys):
    config_file = dump_experiment_config(make_cfg(seeds=[0, 1], episodes=2), tmp_path / "batch.yaml")
    assert main(["batch", "--config", str(config_file)]) == EXIT_OK
    root = tmp_path / "runs" / "t"
    report_dir = tmp_path / "report"
    assert main(["report", str(root), "--out", str(report_dir), "--no-plots"]) == EXIT_OK
    summary = pd.read_csv(report_dir / "summary.csv")
    assert len(summary) == 8
    assert set(summary["variant"]) == set(VARIANTS)
    capsys.readouterr()

    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == EXIT_REPORT_ERROR


# -- learning -----------------------------------------------------------------------

@pytest.mark.slow
def test_mlp_agent_reaches_ninety_percent_of_perfect_defense(tmp_path):
    spec = get_network_spec("default_deterministic")
    oracle = run_episode(CyberDefenseEnv(spec, seed=0), PerfectDefensePolicy())
    assert oracle > run_episode(CyberDefenseEnv(spec, seed=0), NoOpPolicy())
    cfg = ExperimentConfig.model_validate({
        "name": "learn",
        "env": "default_deterministic",
        "episodes": 300,
        "seeds": [0, 1, 2],
        "output_dir": str(tmp_path),
        "policy": {"kind": "mlp"},
        "value": {"kind": "mlp"},
    })
    best = [run_single(cfg, seed).smoothed(5).max() for seed in cfg.seeds]
    assert sum(level >= 0.9 * oracle for level in best) >= 2, f"best MA5 {best} vs oracle {oracle}"


@pytest.mark.slow
def test_four_variants_reach_a_similar_plateau(tmp_path):
    cfg = ExperimentConfig.model_validate({
        "name": "compare",
        "env": "default",
        "episodes": 300,
        "seeds": [0, 1, 2],
        "output_dir": str(tmp_path),
        "policy": {"dbm_hidden": [8, 8], "backend": "exact"},
        "value": {"dbm_hidden": [8, 8], "backend": "exact"},
    })
    report = compare_report(list(run_batch(cfg, workers=4).values()), cfg.plateau)

    variants = report.variants.set_index("variant")
    assert list(variants.index) == list(VARIANTS)
    assert variants["seeds"].eq(3).all()
    assert variants["plateaued"].ge(2).all()
    assert len(report.runs) == 3 * len(VARIANTS)
    baseline = report.runs[report.runs["variant"] == BASELINE_VARIANT]
    assert baseline["plateau_pct"].dropna().eq(100.0).all()

    finals = variants["final_ma_reward"]
    spread = finals.max() - finals.min()
    assert spread <= 0.1 * finals.abs().max(), f"final levels {finals.to_dict()}"
