import numpy as np
import pytest

from agent import (
    NumericalAbortError,
    PpoAgent,
    PpoConfig,
    RolloutBuffer,
    build_head,
    collect_rollout,
    compute_gae,
    ppo_update,
)
from agent.ppo import normalize_advantages, policy_loss_and_grad, value_loss_and_grad
from cyberenv import CyberDefenseEnv
from dbm import DimensionError
from dbm.sampling import Sampler, SamplerConfig


def make_agent(env, policy_kind="mlp", value_kind="mlp", backend="exact", seed=0, **ppo):
    def sampler(role):
        return Sampler(backend, SamplerConfig(num_reads=20, burn_in=5), seed=[seed, role])

    policy = build_head("policy", policy_kind, env.observation_size, env.action_space_size, seed,
                        hidden=(2, 2) if policy_kind == "dbm" else (16,),
                        sampler=sampler(0) if policy_kind == "dbm" else None)
    value = build_head("value", value_kind, env.observation_size, env.action_space_size, seed + 1,
                       hidden=(2, 2) if value_kind == "dbm" else (16,),
                       sampler=sampler(1) if value_kind == "dbm" else None)
    cfg = PpoConfig(**({"n_steps": 10, "n_epochs": 2, "minibatch_size": 5} | ppo))
    return PpoAgent(policy, value, cfg)


@pytest.fixture
def env(tiny_spec):
    e = CyberDefenseEnv(tiny_spec, seed=0)
    e.reset()
    return e


def filled_buffer(rewards, values, dones, bootstrap=0.0):
    buffer = RolloutBuffer()
    for r, v, d in zip(rewards, values, dones):
        buffer.add(np.zeros(2), 0, -0.5, r, v, d)
    buffer.bootstrap_value = bootstrap
    return buffer


def test_gae_matches_naive_computation():
    rewards = [1.0, 0.0, -1.0, 2.0, 0.5]
    values = [0.5, 0.2, -0.3, 1.0, 0.1]
    dones = [False, False, True, False, False]
    gamma, lam, bootstrap = 0.9, 0.8, 0.7
    buffer = filled_buffer(rewards, values, dones, bootstrap)
    compute_gae(buffer, gamma, lam)

    expected = np.zeros(5)
    for t in range(5):
        total, discount = 0.0, 1.0
        for k in range(t, 5):
            next_v = values[k + 1] if k + 1 < 5 else bootstrap
            delta = rewards[k] + gamma * next_v * (not dones[k]) - values[k]
            total += discount * delta
            if dones[k]:
                break
            discount *= gamma * lam
        expected[t] = total
    np.testing.assert_allclose(buffer.advantages, expected, atol=1e-12)
    np.testing.assert_allclose(buffer.returns, expected + np.array(values), atol=1e-12)


def test_gae_with_lambda_one_gives_discounted_returns():
    rewards = [1.0, 1.0, 1.0]
    buffer = filled_buffer(rewards, [0.0, 0.0, 0.0], [False, False, True])
    compute_gae(buffer, 0.5, 1.0)
    np.testing.assert_allclose(buffer.returns, [1.75, 1.5, 1.0])


def test_gae_reward_scale_scales_rewards_only():
    rewards = [2.0, -4.0, 6.0]
    unscaled = filled_buffer(rewards, [0.0, 0.0, 0.0], [False, False, True])
    scaled = filled_buffer(rewards, [0.0, 0.0, 0.0], [False, False, True])
    compute_gae(unscaled, 0.9, 0.95)
    compute_gae(scaled, 0.9, 0.95, reward_scale=0.1)
    np.testing.assert_allclose(scaled.advantages, 0.1 * unscaled.advantages, atol=1e-12)
    assert scaled.as_arrays()["rewards"].tolist() == rewards


def test_normalize_advantages():
    adv = normalize_advantages(np.array([1.0, 2.0, 3.0, 6.0]))
    assert adv.mean() == pytest.approx(0.0, abs=1e-12)
    assert adv.std() == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_array_equal(normalize_advantages(np.array([4.0])), [4.0])


@pytest.mark.parametrize("entropy_coef", [0.0, 0.05])
def test_policy_gradient_matches_finite_differences(entropy_coef):
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(6, 4))
    actions = rng.integers(0, 4, size=6)
    log_pi = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    old = log_pi[np.arange(6), actions] + rng.normal(scale=0.05, size=6)
    adv = rng.normal(size=6)

    _, d_logits, _ = policy_loss_and_grad(logits, actions, old, adv, 0.2, entropy_coef)
    step = 1e-6
    numeric = np.zeros_like(logits)
    for idx in np.ndindex(logits.shape):
        up, down = logits.copy(), logits.copy()
        up[idx] += step
        down[idx] -= step
        numeric[idx] = (
            policy_loss_and_grad(up, actions, old, adv, 0.2, entropy_coef)[0]
            - policy_loss_and_grad(down, actions, old, adv, 0.2, entropy_coef)[0]
        ) / (2 * step)
    np.testing.assert_allclose(d_logits, numeric, atol=1e-7)


def test_clipped_samples_carry_no_gradient():
    logits = np.array([[2.0, 0.0]])
    actions = np.array([0])
    # ratio far above 1 + clip with a positive advantage: the clipped branch is active
    old = np.array([np.log(0.1)])
    loss, d_logits, info = policy_loss_and_grad(logits, actions, old, np.array([1.0]), 0.2)
    np.testing.assert_array_equal(d_logits, 0.0)
    assert loss == pytest.approx(-1.2)
    assert info["clip_fraction"] == 1.0


def test_value_loss_and_grad():
    loss, grad = value_loss_and_grad(np.array([[1.0], [3.0]]), np.array([0.0, 1.0]))
    assert loss == pytest.approx(2.5)
    np.testing.assert_allclose(grad, [[1.0], [2.0]])


@pytest.mark.parametrize("role", ["policy", "value"])
def test_dbm_head_backward_matches_finite_differences(role, env):
    sampler = Sampler("exact")
    head = build_head(role, "dbm", env.observation_size, env.action_space_size, 5,
                      hidden=(2, 2), sampler=sampler, init_scale=0.5)
    rng = np.random.default_rng(0)
    obs = rng.integers(0, 2, size=(3, env.observation_size))
    out, cache = head.forward(obs)
    d_out = rng.normal(size=out.shape)
    grads = head.backward(cache, d_out)
    supports = [terms.support for terms in cache]

    def objective():
        return float(np.sum(d_out * head.forward(obs, supports)[0]))

    step = 1e-5
    for name, p in head.parameters().items():
        flat = p.reshape(-1)
        allowed = np.flatnonzero(head.topo.edge_mask().reshape(-1)) if name == "couplings" else np.arange(flat.size)
        for k in rng.choice(allowed, size=min(12, allowed.size), replace=False):
            orig = flat[k]
            flat[k] = orig + step
            up = objective()
            flat[k] = orig - step
            down = objective()
            flat[k] = orig
            assert grads[name].reshape(-1)[k] == pytest.approx((up - down) / (2 * step), rel=1e-5, abs=1e-8)


def test_heads_report_shapes(env):
    agent = make_agent(env, "dbm", "dbm")
    obs = env.observation[None, :]
    logits, _ = agent.policy.forward(obs)
    values, _ = agent.value.forward(obs)
    assert logits.shape == (1, env.action_space_size)
    assert values.shape == (1, 1)
    with pytest.raises(DimensionError):
        agent.policy.forward(np.zeros((1, env.observation_size + 1)))


def test_agent_rejects_swapped_heads(env):
    agent = make_agent(env)
    with pytest.raises(ValueError):
        PpoAgent(agent.value, agent.policy, agent.cfg)


def test_collect_rollout_records_steps_and_episodes(env):
    agent = make_agent(env)
    buffer = collect_rollout(env, agent.policy, agent.value, 12, np.random.default_rng(0))
    assert len(buffer) == 12
    # episode length 5: two complete episodes, the third still running
    assert len(buffer.episode_rewards) == 2
    assert buffer.episode_lengths == [5, 5]
    assert buffer.dones[4] and buffer.dones[9] and not buffer.dones[-1]
    assert buffer.bootstrap_value != 0.0


def test_collect_rollout_stops_at_max_episodes(env):
    agent = make_agent(env)
    buffer = collect_rollout(env, agent.policy, agent.value, 100, np.random.default_rng(0), max_episodes=3)
    assert len(buffer) == 15
    assert len(buffer.episode_rewards) == 3
    assert buffer.bootstrap_value == 0.0
    assert env.done


def test_one_sampler_call_per_policy_evaluation(env):
    agent = make_agent(env, "dbm", "mlp")
    buffer = collect_rollout(env, agent.policy, agent.value, 10, np.random.default_rng(1))
    assert agent.policy.sampler_calls == agent.policy.evaluations == 10
    compute_gae(buffer, 0.99, 0.95)
    ppo_update(agent, buffer, np.random.default_rng(2))
    # two epochs re-evaluate every stored observation once each
    assert agent.policy.evaluations == 30
    assert agent.policy.sampler_calls == 30


def test_reused_supports_skip_the_sampler_during_updates(env):
    agent = make_agent(env, "dbm", "dbm", backend="gibbs", reuse_rollout_supports=True)
    buffer = collect_rollout(env, agent.policy, agent.value, 10, np.random.default_rng(1), keep_supports=True)
    assert all(s is not None for s in buffer.policy_supports)
    calls = (agent.policy.sampler_calls, agent.value.sampler_calls)
    compute_gae(buffer, 0.99, 0.95)
    ppo_update(agent, buffer, np.random.default_rng(2))
    assert (agent.policy.sampler_calls, agent.value.sampler_calls) == calls


def test_policy_trace_rows(env):
    agent = make_agent(env, "dbm", "mlp")
    trace = []
    collect_rollout(env, agent.policy, agent.value, 3, np.random.default_rng(0), policy_trace=trace)
    assert len(trace) == 3 * env.action_space_size
    first_step = [row for row in trace if row["step"] == 0]
    assert sum(row["probability"] for row in first_step) == pytest.approx(1.0)
    assert all(row["free_energy"] == -row["logit"] for row in trace)


@pytest.mark.parametrize("kinds", [("mlp", "mlp"), ("dbm", "mlp"), ("mlp", "dbm"), ("dbm", "dbm")])
def test_ppo_update_changes_parameters(env, kinds):
    agent = make_agent(env, *kinds)
    before = {k: p.copy() for k, p in agent.parameters().items()}
    buffer = collect_rollout(env, agent.policy, agent.value, 10, np.random.default_rng(0))
    compute_gae(buffer, 0.99, 0.95)
    stats = ppo_update(agent, buffer, np.random.default_rng(1))
    assert stats.minibatches == 4
    assert np.isfinite(stats.policy_loss) and np.isfinite(stats.value_loss)
    assert stats.grad_norm > 0
    assert any(not np.array_equal(before[k], p) for k, p in agent.parameters().items())
    assert agent.optimizer.state.t == 4


def test_ppo_update_is_deterministic(tiny_spec):
    results = []
    for _ in range(2):
        env = CyberDefenseEnv(tiny_spec, seed=3)
        env.reset()
        agent = make_agent(env, "dbm", "mlp")
        rng = np.random.default_rng(9)
        buffer = collect_rollout(env, agent.policy, agent.value, 10, rng)
        compute_gae(buffer, 0.99, 0.95)
        ppo_update(agent, buffer, rng)
        results.append({k: p.copy() for k, p in agent.parameters().items()})
    for k in results[0]:
        np.testing.assert_array_equal(results[0][k], results[1][k])


def test_ppo_update_requires_gae(env):
    agent = make_agent(env)
    buffer = collect_rollout(env, agent.policy, agent.value, 5, np.random.default_rng(0))
    with pytest.raises(ValueError, match="compute_gae"):
        ppo_update(agent, buffer, np.random.default_rng(0))


def test_non_finite_loss_aborts_with_diagnostics(env):
    agent = make_agent(env)
    buffer = collect_rollout(env, agent.policy, agent.value, 5, np.random.default_rng(0))
    buffer.rewards[2] = float("nan")
    compute_gae(buffer, 0.99, 0.95)
    before = {k: p.copy() for k, p in agent.parameters().items()}
    with pytest.raises(NumericalAbortError) as excinfo:
        ppo_update(agent, buffer, np.random.default_rng(0))
    assert "value_loss" in excinfo.value.diagnostics
    assert excinfo.value.diagnostics["epoch"] == 0
    for k, p in agent.parameters().items():
        np.testing.assert_array_equal(before[k], p)


def test_buffer_rejects_non_finite_log_prob():
    with pytest.raises(ValueError):
        RolloutBuffer().add(np.zeros(2), 0, float("-inf"), 0.0, 0.0, False)
