"""Smoke tests for the capolab Python module.

Runs under pytest, or directly: PYTHONPATH=<build>/python python test_smoke.py
"""

import math
import os
import tempfile

import capolab


def make_bandit():
    return capolab.GroupedBandit([[1.0, 0.0], [0.8, 0.2]])


def make_bandit_config(steps=40):
    cfg = capolab.TrainConfig()
    cfg.env = make_bandit()
    cfg.algo = capolab.EstimatorKind.GRPO
    cfg.curriculum = capolab.Curriculum.CAPO
    cfg.switch_fraction = 0.25
    cfg.total_steps = steps
    cfg.group_size = 8
    cfg.seed = 7
    return cfg


def test_version_and_exports():
    assert capolab.__version__ == "0.1.0"
    for name in (
        "PolicyParams", "Rng", "GroupedBandit", "ChainTask", "TrainConfig",
        "train", "sweep_switch_points", "compare_algorithms", "eval_policy",
        "mc_gradient_stats", "variance_halving_check",
    ):
        assert hasattr(capolab, name), name


def test_policy_math():
    params = capolab.PolicyParams(2, 3)
    probs = capolab.action_probabilities(params, 0)
    assert len(probs) == 3
    for p in probs:
        assert math.isclose(p, 1.0 / 3.0, rel_tol=1e-12)
    assert math.isclose(capolab.policy_entropy(params, 0), math.log(3.0), rel_tol=1e-12)
    assert math.isclose(capolab.log_prob(params, 1, 2), math.log(1.0 / 3.0), rel_tol=1e-12)
    ref = capolab.ReferencePolicy(params)
    assert capolab.kl_to_reference(params, ref, [0, 1]) == 0.0


def test_env_shapes_and_optimum():
    env = make_bandit()
    assert capolab.env_num_contexts(env) == 2
    assert capolab.env_num_actions(env) == 2
    assert capolab.env_horizon(env) == 1
    assert math.isclose(capolab.optimal_expected_reward(env), 0.9, rel_tol=1e-12)

    chain = capolab.ChainTask(tasks=2, actions=3, chain_length=3, flip_prob=0.1)
    assert chain.num_contexts() == 6
    assert chain.context_id(1, 2) == 5
    assert chain.correct_action(1, 2) == 0
    assert capolab.optimal_expected_reward(chain) == 1.0

    uniform = capolab.PolicyParams(2, 2)
    assert math.isclose(capolab.expected_policy_reward(env, uniform), 0.5, rel_tol=1e-12)


def test_train_learns_and_is_deterministic():
    cfg = make_bandit_config()
    result = capolab.train(cfg)
    assert len(result.metrics) == cfg.total_steps
    # switch at floor(0.25 * 40) = 10: imitation before, discrimination after
    assert result.metrics[0].phase == 1
    assert result.metrics[9].phase == 1
    assert result.metrics[10].phase == 2
    assert result.metrics[-1].phase == 2
    assert result.final_expected_reward > 0.7  # uniform policy starts at 0.5
    assert math.isclose(
        result.final_expected_reward,
        capolab.expected_policy_reward(cfg.env, result.final_params),
        rel_tol=1e-12,
    )
    again = capolab.train(cfg)
    assert again.final_params.logits.tolist() == result.final_params.logits.tolist()
    assert again.final_mean_reward == result.final_mean_reward


def test_train_abort_on_numeric_blowup():
    cfg = make_bandit_config(steps=3)
    cfg.noise = capolab.NoiseModel(1e308)
    try:
        capolab.train(cfg)
    except capolab.TrainAbort as err:
        assert isinstance(err, RuntimeError)
    else:
        raise AssertionError("train() should abort on a non-finite objective")


def test_estimators_and_objective():
    env = make_bandit()
    params = capolab.PolicyParams(2, 2)
    rng = capolab.Rng(5)
    group = capolab.rollout_group(env, params, 0, 8, rng)
    assert group.size() == 8

    capolab.rloo_advantage(group)
    assert abs(sum(t.advantage_scalar for t in group.items)) < 1e-9

    capolab.grpo_advantage(group)
    assert abs(sum(t.advantage_scalar for t in group.items)) < 1e-9

    batch = capolab.apply_advantages(
        [group], capolab.EstimatorKind.PPO, 2, capolab.GaeConfig()
    )
    profile = capolab.summarize_advantages(batch)
    assert profile.count == 8
    assert 0.0 <= profile.frac_positive <= 1.0

    ref = capolab.ReferencePolicy(params)
    clip = capolab.ClipConfig()
    full = capolab.phase2_objective(batch, params, ref, clip)
    assert full.num_total == 8 and full.num_contributing == 8
    assert full.gradient.all_finite()
    gated = capolab.phase1_objective(batch, params, ref, clip)
    assert gated.num_contributing <= gated.num_total
    check = capolab.surrogate_gradient_check(batch, params, ref, clip, False)
    assert check.pass_


def test_sweep_and_compare_shapes():
    chain = capolab.ChainTask(tasks=1, actions=2, chain_length=2)
    cfg = capolab.TrainConfig()
    cfg.env = chain
    cfg.total_steps = 10
    cfg.group_size = 4
    cfg.seed = 3

    seeds = capolab.seed_list(3, 2)
    assert seeds[0] == 3 and len(seeds) == 2
    rows = capolab.sweep_switch_points(cfg, [0.0, 0.5], seeds)
    assert len(rows) == 4  # fraction-major: (0.0, s0), (0.0, s1), (0.5, s0), (0.5, s1)
    assert [r.switch_fraction for r in rows] == [0.0, 0.0, 0.5, 0.5]
    assert rows[0].seed == seeds[0] and rows[1].seed == seeds[1]

    table = capolab.compare_algorithms(
        cfg, [capolab.Curriculum.NONE, capolab.Curriculum.CAPO], seeds
    )
    assert len(table) == 8  # four estimators x two curricula
    for row in table:
        if row.curriculum == capolab.Curriculum.NONE:
            assert row.delta == 0.0 and row.delta_expected == 0.0


def test_lab_statistics():
    halving = capolab.variance_halving_check(1.0, 100000, 11)
    assert halving.pass_
    assert abs(halving.ratio - 0.5) < 0.02

    # Two distinct contexts so the single-sample gradients actually vary (a
    # one-context two-action uniform policy gives every sample the same value).
    env = make_bandit()
    params = capolab.PolicyParams(2, 2)
    stats = capolab.mc_gradient_stats(
        env, params, capolab.LabConfig(capolab.LabEstimator.PHASE2, 0.0, 20000, 1, 9)
    )
    assert stats.samples == 20000
    assert stats.bias_norm < 0.05  # unbiased estimator, Monte Carlo error only
    assert stats.variance_trace > 0.0

    sharded = capolab.mc_gradient_stats(
        env, params, capolab.LabConfig(capolab.LabEstimator.PHASE2, 0.0, 20000, 4, 9)
    )
    sharded_again = capolab.mc_gradient_stats(
        env, params, capolab.LabConfig(capolab.LabEstimator.PHASE2, 0.0, 20000, 4, 9)
    )
    assert sharded.bias_norm == sharded_again.bias_norm  # shard merge is deterministic


def test_eval_and_checkpoint_roundtrip():
    env = capolab.GroupedBandit([[1.0, 0.0], [1.0, 0.0]])
    params = capolab.PolicyParams(2, 2)
    params.logits.set(0, 0, 3.0)
    params.logits.set(1, 0, 3.0)
    score = capolab.eval_policy(env, params, 16, capolab.Rng(0))
    assert score == 1.0  # greedy picks action 0, which always pays

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "policy.txt")
        capolab.save_checkpoint(params, path)
        loaded = capolab.load_checkpoint(path)
    assert loaded.logits.tolist() == params.logits.tolist()


if __name__ == "__main__":
    import sys
    import traceback

    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"PASS {name}")
            except Exception:
                failures += 1
                print(f"FAIL {name}")
                traceback.print_exc()
    sys.exit(1 if failures else 0)
