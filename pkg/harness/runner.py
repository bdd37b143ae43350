"""Train (variant, seed) runs and write their metrics continuously."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from agent import (
    NumericalAbortError,
    PpoAgent,
    build_head,
    collect_rollout,
    compute_gae,
    load_checkpoint,
    ppo_update,
    save_checkpoint,
)
from cyberenv import CyberDefenseEnv, NetworkSpec
from dbm.free_energy import dump_policy_trace
from dbm.sampling import Sampler
from harness.config import ExperimentConfig, HeadConfig, apply_overrides, variant_configs
from harness.metrics import RunMetrics, load_run_metrics, moving_average
from harness.settings import get_settings
from harness.store import RunStore
from harness.tracing import RunTracer
from harness.validators import ConfigValidationError, validate_experiment_config

logger = logging.getLogger(__name__)

# order of the child seeds spawned from each run seed
SEED_STREAMS = ("env", "policy_init", "value_init", "agent")
SAMPLER_ROLES = {"policy": 0, "value": 1}
# the ma5_reward column is always a five-episode average
EPISODE_MA_WINDOW = 5


def output_root(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir or get_settings().output_dir)


def run_dir_for(cfg: ExperimentConfig, seed: int, root: Path | None = None) -> Path:
    return (root or output_root(cfg)) / cfg.name / cfg.variant / f"seed-{seed}"


def _build_head(role: str, head_cfg: HeadConfig, spec_sizes: tuple[int, int], init_seed, run_seed: int):
    n_obs, n_actions = spec_sizes
    sampler = None
    if head_cfg.kind == "dbm":
        sampler = Sampler(
            head_cfg.backend,
            head_cfg.sampler,
            seed=[head_cfg.sampler.rng_seed, run_seed, SAMPLER_ROLES[role]],
        )
    return build_head(
        role,
        head_cfg.kind,
        n_obs,
        n_actions,
        init_seed,
        hidden=tuple(head_cfg.mlp_hidden if head_cfg.kind == "mlp" else head_cfg.dbm_hidden),
        activation=head_cfg.activation,
        sampler=sampler,
        init_scale=head_cfg.init_scale,
        beta=head_cfg.beta,
    )


def build_training(cfg: ExperimentConfig, spec: NetworkSpec, seed: int):
    """Environment, agent and agent rng, all derived deterministically from one run seed."""
    streams = dict(zip(SEED_STREAMS, np.random.SeedSequence(seed).spawn(len(SEED_STREAMS))))
    env = CyberDefenseEnv(spec, seed=streams["env"], trace=cfg.trace)
    sizes = (env.observation_size, env.action_space_size)
    policy = _build_head("policy", cfg.policy, sizes, streams["policy_init"], seed)
    value = _build_head("value", cfg.value, sizes, streams["value_init"], seed)
    agent = PpoAgent(policy, value, cfg.ppo)
    rng = np.random.default_rng(streams["agent"])
    return env, agent, rng


def _counters(agent: PpoAgent) -> dict:
    return {
        "policy_evaluations": agent.policy.evaluations,
        "policy_sampler_calls": agent.policy.sampler_calls,
        "value_evaluations": agent.value.evaluations,
        "value_sampler_calls": agent.value.sampler_calls,
    }


def _episode_rows(history: list[float], new_rewards: list[float], lengths: list[int], wall_ms: list[int]) -> list[dict]:
    rows = []
    for reward, steps, ms in zip(new_rewards, lengths, wall_ms):
        history.append(reward)
        ma = moving_average(history[-EPISODE_MA_WINDOW:], EPISODE_MA_WINDOW)
        rows.append({
            "episode": len(history),
            "total_reward": reward,
            "steps": steps,
            "ma5_reward": float(ma[-1]) if ma.size else None,
            "wall_ms": ms,
        })
    return rows


def run_single(cfg: ExperimentConfig, seed: int, run_dir: str | Path | None = None, resume: bool = False) -> RunMetrics:
    """Train one (variant, seed) for cfg.episodes episodes.

    Raises NumericalAbortError after marking the run aborted; the metrics
    written up to that point are kept.
    """
    spec = validate_experiment_config(cfg)
    store = RunStore(run_dir or run_dir_for(cfg, seed))
    env, agent, rng = build_training(cfg, spec, seed)

    progress = {"episodes": 0, "updates": 0}
    history: list[float] = []
    if resume and store.checkpoint_path.exists():
        progress = load_checkpoint(store.checkpoint_path, agent, rng, env)
        store.truncate_to(progress["episodes"], progress["updates"])
        history = store.read_episodes()["total_reward"].astype(float).tolist()
        store.update_metadata(status="running", episodes_planned=cfg.episodes, finished_at=None)
        logger.info("Resuming %s seed %d at episode %d", cfg.variant, seed, progress["episodes"])
    else:
        if resume:
            logger.warning("No checkpoint in %s; starting a fresh run", store.run_dir)
        store.start(cfg, seed)
        env.reset()

    record_policy_trace = cfg.trace and agent.policy.uses_sampler
    tracer_meta = {"variant": cfg.variant, "seed": seed, "env": cfg.env, "episodes": cfg.episodes}

    with RunTracer(f"{cfg.name}/{cfg.variant}/seed-{seed}", metadata=tracer_meta) as tracer:
        while progress["episodes"] < cfg.episodes:
            before = _counters(agent)
            started = time.perf_counter()
            policy_trace = [] if record_policy_trace else None

            buffer = collect_rollout(
                env,
                agent.policy,
                agent.value,
                cfg.ppo.n_steps,
                rng,
                max_episodes=cfg.episodes - progress["episodes"],
                keep_supports=cfg.ppo.reuse_rollout_supports,
                policy_trace=policy_trace,
            )
            compute_gae(buffer, cfg.ppo.gamma, cfg.ppo.gae_lambda, reward_scale=cfg.ppo.reward_scale)

            n_new = len(buffer.episode_rewards)
            wall = [0] * n_new
            if cfg.record_wall_time and n_new:
                wall = [int(round((time.perf_counter() - started) * 1000 / n_new))] * n_new
            store.append_episodes(_episode_rows(history, buffer.episode_rewards, buffer.episode_lengths, wall))
            progress["episodes"] += n_new
            if policy_trace:
                dump_policy_trace(store.policy_trace_path, policy_trace)

            try:
                stats = ppo_update(agent, buffer, rng)
            except NumericalAbortError as e:
                store.finish(status="aborted", diagnostics=e.diagnostics, episodes_completed=progress["episodes"])
                raise

            progress["updates"] += 1
            after = _counters(agent)
            row = {
                "update": progress["updates"],
                "episodes_done": progress["episodes"],
                "total_steps": env.total_steps,
                **stats.as_row(),
                **{k: after[k] - before[k] for k in after},
            }
            store.append_update(row)
            with tracer.span(f"update-{progress['updates']}", metadata={"episodes_done": progress["episodes"]}) as span:
                span.update(output=row)
            save_checkpoint(store.checkpoint_path, agent, rng, env, progress)

            if n_new:
                logger.info(
                    "%s seed %d: episode %d/%d, reward %.2f",
                    cfg.variant, seed, progress["episodes"], cfg.episodes, history[-1],
                )
        tracer.set_output({"episodes": progress["episodes"], "final_reward": history[-1] if history else None})

    if cfg.trace:
        env.write_trace(store.trace_path)
    store.finish(status="finished", episodes_completed=progress["episodes"])
    return RunMetrics(
        variant=cfg.variant,
        seed=seed,
        episodes=store.read_episodes(),
        updates=store.read_updates(),
    )


def run_experiment(cfg: ExperimentConfig, resume: bool = False) -> dict[int, RunMetrics]:
    """Every seed of the configured variant, one after another."""
    return {seed: run_single(cfg, seed, resume=resume) for seed in cfg.seeds}


def _run_job(cfg_data: dict, seed: int, run_dir: str) -> tuple[str, int, str]:
    cfg = ExperimentConfig.model_validate(cfg_data)
    run_single(cfg, seed, run_dir)
    return cfg.variant, seed, run_dir


def run_batch(cfg: ExperimentConfig, workers: int = 1) -> dict[tuple[str, int], RunMetrics]:
    """All configured variants x seeds; with workers > 1 each job runs in its own process."""
    validate_experiment_config(cfg, batch=True)
    jobs = [(v_cfg, seed, run_dir_for(v_cfg, seed)) for v_cfg in variant_configs(cfg) for seed in v_cfg.seeds]
    logger.info("Batch %s: %d runs on %d worker(s)", cfg.name, len(jobs), workers)

    if workers <= 1:
        for v_cfg, seed, run_dir in jobs:
            run_single(v_cfg, seed, run_dir)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_job, v_cfg.model_dump(mode="json"), seed, str(run_dir))
                for v_cfg, seed, run_dir in jobs
            ]
            for future in futures:
                future.result()

    return {(v_cfg.variant, seed): load_run_metrics(run_dir) for v_cfg, seed, run_dir in jobs}


def run_lr_sweep(cfg: ExperimentConfig) -> pd.DataFrame:
    """Train the configured variant at each learning rate in cfg.learning_rate_sweep."""
    if not cfg.learning_rate_sweep:
        raise ConfigValidationError("learning_rate_sweep is empty")
    root = output_root(cfg) / cfg.name / "sweep"
    rows = []
    for lr in cfg.learning_rate_sweep:
        lr_cfg = apply_overrides(cfg, learning_rate=lr)
        for seed in lr_cfg.seeds:
            metrics = run_single(lr_cfg, seed, root / f"lr-{lr:g}" / lr_cfg.variant / f"seed-{seed}")
            rows.append({
                "learning_rate": lr,
                "seed": seed,
                "variant": lr_cfg.variant,
                "final_ma_reward": metrics.final_level(cfg.plateau.window, cfg.plateau.hold),
                "plateau_episode": metrics.plateau(cfg.plateau.window, cfg.plateau.tolerance_frac, cfg.plateau.hold),
            })
    df = pd.DataFrame(rows)
    root.mkdir(parents=True, exist_ok=True)
    df.to_csv(root / "sweep.csv", index=False)
    return df
