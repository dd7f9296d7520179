"""Exact GP regression: fit/predict, likelihood, metrics, optimizer."""

import math

import numpy as np
import pytest

from posegp import (
    IllConditionedError,
    OptimizerConfig,
    Pose,
    RegressionProblem,
    cross_matrix,
    default_spec,
    finite_difference_gradient,
    fit,
    gram_matrix,
    kernel_diag,
    log_marginal_likelihood,
    metrics_rmse_nlpd,
    optimize_hyperparameters,
    optimize_hyperparameters_joint,
    predict,
    random_rotation,
    rot_axis,
    sample_posterior,
)
from posegp.gp import _jitter_cholesky


def ring_poses(angles):
    return [Pose(np.zeros(3), rot_axis("z", a)) for a in angles]


def random_poses(n, seed):
    rng = np.random.default_rng(seed)
    return [
        Pose(rng.standard_normal(3), random_rotation(1000 * seed + k))
        for k in range(n)
    ]


def sample_prior_targets(spec, inputs, noise, seed, d=1):
    K = gram_matrix(spec, inputs, 1e-10) + noise * np.eye(len(inputs))
    L = np.linalg.cholesky(K)
    return L @ np.random.default_rng(seed).standard_normal((len(inputs), d))


def test_fit_reproduces_training_targets_at_tiny_noise():
    poses = random_poses(20, 0)
    y = np.column_stack(
        [np.trace(p.R) for p in poses] + [np.sin(p.p)[0] for p in poses]
    ).reshape(20, 2, order="F")
    problem = RegressionProblem(poses, y, 1e-10, default_spec("view_iso"))
    post = fit(problem)
    mean, var = predict(post, poses)
    assert np.max(np.abs(mean - problem.targets)) < 1e-6
    assert np.all(var >= 0.0)
    assert np.max(var) < 1e-6


def test_predict_matches_dense_solve_oracle():
    poses = random_poses(9, 1)
    query = random_poses(5, 2)
    spec = default_spec("pose_product")
    noise = 0.05
    y = sample_prior_targets(spec, poses, noise, 3, d=2)
    post = fit(RegressionProblem(poses, y, noise, spec))

    K = gram_matrix(spec, poses, 0.0)
    Kn = K + (noise + post.jitter) * np.eye(9)
    Ks = cross_matrix(spec, poses, query)
    exp_mean = Ks.T @ np.linalg.solve(Kn, y)
    exp_var = kernel_diag(spec, query) - np.sum(Ks * np.linalg.solve(Kn, Ks), axis=0)

    mean, var = predict(post, query)
    assert mean.shape == (5, 2) and var.shape == (5,)
    np.testing.assert_allclose(mean, exp_mean, atol=1e-8)
    np.testing.assert_allclose(var, exp_var, atol=1e-8)


def test_one_dimensional_targets_become_column():
    poses = random_poses(6, 4)
    problem = RegressionProblem(poses, np.arange(6.0), 0.1, default_spec("view_iso"))
    assert problem.targets.shape == (6, 1)
    mean, var = predict(fit(problem), poses[:2])
    assert mean.shape == (2, 1) and var.shape == (2,)


def test_problem_validation():
    poses = random_poses(3, 5)
    spec = default_spec("view_iso")
    with pytest.raises(ValueError):
        RegressionProblem(poses, np.zeros((2, 1)), 0.1, spec)
    with pytest.raises(ValueError):
        RegressionProblem(poses, np.zeros((3, 1, 1)), 0.1, spec)
    with pytest.raises(ValueError):
        RegressionProblem(poses, np.zeros((3, 0)), 0.1, spec)
    with pytest.raises(ValueError):
        RegressionProblem(poses, np.zeros((3, 1)), -0.1, spec)
    with pytest.raises(ValueError):
        RegressionProblem(poses, np.zeros((3, 1)), math.nan, spec)


def test_sample_posterior_shapes_determinism_and_moments():
    poses = ring_poses(np.linspace(-2.0, 2.0, 8))
    y = sample_prior_targets(default_spec("view_iso"), poses, 0.01, 6, d=2)
    post = fit(RegressionProblem(poses, y, 0.01, default_spec("view_iso")))
    query = ring_poses([-1.3, 0.4, 2.9])

    s1 = sample_posterior(post, query, 4, seed=7)
    s2 = sample_posterior(post, query, 4, seed=7)
    assert s1.shape == (4, 3, 2)
    np.testing.assert_array_equal(s1, s2)
    assert not np.array_equal(s1, sample_posterior(post, query, 4, seed=8))
    with pytest.raises(ValueError):
        sample_posterior(post, query, 0, seed=0)

    mean, var = predict(post, query)
    s = sample_posterior(post, query, 40000, seed=9)
    np.testing.assert_allclose(s.mean(axis=0), mean, atol=0.05)
    np.testing.assert_allclose(s.var(axis=0), np.tile(var[:, None], (1, 2)), atol=0.05)


def test_log_marginal_likelihood_single_point_oracle():
    pose = ring_poses([0.3])
    y = 0.7
    noise = 0.2
    problem = RegressionProblem(pose, np.array([y]), noise, default_spec("view_iso"))
    v = 1.0 + noise + 1e-8  # prior variance + noise + first-step jitter
    expected = -0.5 * y * y / v - 0.5 * math.log(v) - 0.5 * math.log(2 * math.pi)
    assert log_marginal_likelihood(problem) == pytest.approx(expected, rel=1e-12)


def test_log_marginal_likelihood_dense_oracle_and_additivity():
    poses = random_poses(7, 10)
    spec = default_spec("pose_product")
    noise = 0.1
    Y = sample_prior_targets(spec, poses, noise, 11, d=2)
    problem = RegressionProblem(poses, Y, noise, spec)

    post = fit(problem)
    K = gram_matrix(spec, poses, 0.0) + (noise + post.jitter) * np.eye(7)
    sign, logdet = np.linalg.slogdet(K)
    assert sign > 0
    quad = float(np.sum(Y * np.linalg.solve(K, Y)))
    expected = -0.5 * quad - logdet - 7.0 * math.log(2 * math.pi)
    assert log_marginal_likelihood(problem) == pytest.approx(expected, rel=1e-10)

    per_column = sum(
        log_marginal_likelihood(RegressionProblem(poses, Y[:, j], noise, spec))
        for j in range(2)
    )
    assert log_marginal_likelihood(problem) == pytest.approx(per_column, rel=1e-12)


def test_metrics_oracle():
    mean = np.array([[1.0, 2.0], [3.0, 4.0]])
    truth = np.array([[1.5, 2.0], [3.0, 2.0]])
    var = np.array([0.5, 0.25])
    rmse, nlpd = metrics_rmse_nlpd((mean, var), truth, 0.5)
    assert rmse == pytest.approx(math.sqrt((0.25 + 0.0 + 0.0 + 4.0) / 4.0), rel=1e-14)
    v = np.array([[1.0, 1.0], [0.75, 0.75]])
    err2 = np.array([[0.25, 0.0], [0.0, 4.0]])
    expected = np.mean(0.5 * np.log(2 * math.pi * v) + err2 / (2 * v))
    assert nlpd == pytest.approx(expected, rel=1e-14)

    with pytest.raises(ValueError):
        metrics_rmse_nlpd((mean, var), truth[:1], 0.5)
    with pytest.raises(ValueError):
        metrics_rmse_nlpd((mean, np.zeros(2)), truth, 0.0)


def test_jitter_cholesky_schedule():
    K = np.diag([1.0, 2.0])
    L, jitter = _jitter_cholesky(K, 0.5, 1.0)
    assert jitter == 1e-8
    np.testing.assert_allclose(L @ L.T, K + (0.5 + jitter) * np.eye(2), atol=1e-12)

    with pytest.raises(IllConditionedError) as info:
        _jitter_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0, 1.0)
    assert 0.0 < info.value.final_jitter <= 1e-4
    assert "jitter" in str(info.value)


def test_finite_difference_gradient_quadratic():
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    c = np.array([0.5, -1.0])

    def f(x):
        d = x - c
        return -float(d @ A @ d)

    x = np.array([1.2, 0.7])
    g = finite_difference_gradient(f, x, 1e-5)
    np.testing.assert_allclose(g, -2.0 * A @ (x - c), rtol=1e-6, atol=1e-8)


def test_optimizer_no_free_parameters():
    poses = ring_poses(np.linspace(0, 1, 5))
    problem = RegressionProblem(poses, np.ones(5), 0.1, default_spec("view_iso"))
    spec, noise, trace = optimize_hyperparameters(problem, [])
    assert spec == problem.kernel
    assert noise == 0.1
    assert len(trace) == 1
    assert trace[0] == pytest.approx(log_marginal_likelihood(problem), rel=1e-12)


def test_optimizer_rejects_bad_start():
    poses = ring_poses(np.linspace(0, 1, 4))
    bad = RegressionProblem(
        poses, np.array([np.inf, 1.0, 0.0, 0.0]), 0.1, default_spec("view_iso")
    )
    with pytest.raises(ValueError):
        optimize_hyperparameters(bad, ["lengthscale"])
    ok = RegressionProblem(poses, np.ones(4), 0.0, default_spec("view_iso"))
    with pytest.raises(ValueError):
        optimize_hyperparameters(ok, ["noise"])  # zero noise has no log
    with pytest.raises(ValueError):
        optimize_hyperparameters_joint([], ["lengthscale"])


def test_optimizer_trace_monotone_and_improving():
    angles = np.linspace(-3.0, 3.0, 30)
    poses = ring_poses(angles)
    spec0 = default_spec("view_iso", lengthscale=3.0)
    y = sample_prior_targets(default_spec("view_iso", lengthscale=0.5), poses, 0.01, 12)
    problem = RegressionProblem(poses, y, 0.05, spec0)
    spec, noise, trace = optimize_hyperparameters(
        problem, ["lengthscale", "magnitude", "noise"]
    )
    assert all(b > a for a, b in zip(trace, trace[1:]))
    assert len(trace) > 1
    final = log_marginal_likelihood(RegressionProblem(poses, y, noise, spec))
    assert final == pytest.approx(trace[-1], rel=1e-10)
    assert final > trace[0]


def test_optimizer_recovers_lengthscale_scale():
    angles = np.linspace(-3.0, 3.0, 40)
    poses = ring_poses(angles)
    true_ell = 0.7
    y = sample_prior_targets(
        default_spec("view_iso", lengthscale=true_ell), poses, 1e-4, 13
    )
    problem = RegressionProblem(poses, y, 1e-4, default_spec("view_iso", lengthscale=2.0))
    spec, _, _ = optimize_hyperparameters(problem, ["lengthscale"])
    ratio = spec.get_param("lengthscale") / true_ell
    assert 0.5 < ratio < 1.5


def test_joint_optimizer_shares_one_parameter_set():
    angles = np.linspace(-3.0, 3.0, 25)
    poses = ring_poses(angles)
    spec_true = default_spec("view_iso", lengthscale=0.6)
    problems = [
        RegressionProblem(
            poses,
            sample_prior_targets(spec_true, poses, 1e-4, 100 + k),
            1e-4,
            default_spec("view_iso", lengthscale=2.5),
        )
        for k in range(3)
    ]
    spec, noise, trace = optimize_hyperparameters_joint(
        problems, {"lengthscale"}, OptimizerConfig(max_iters=60)
    )
    total = sum(
        log_marginal_likelihood(RegressionProblem(p.inputs, p.targets, noise, spec))
        for p in problems
    )
    assert total == pytest.approx(trace[-1], rel=1e-10)
    assert total > trace[0]
    ratio = spec.get_param("lengthscale") / 0.6
    assert 0.5 < ratio < 1.5
