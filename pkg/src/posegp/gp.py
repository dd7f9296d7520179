"""Exact Gaussian-process regression with a shared Gram factorization.

Multi-output targets (n x d) share one kernel and one Cholesky factor:
fitting d independent output dimensions costs a single n x n
factorization.  The prior mean is zero everywhere; callers that need
mean handling subtract and restore it around fit/predict.

Hyperparameters are learned by gradient ascent on the log marginal
likelihood in log-parameter space, with central finite-difference
gradients and a backtracking line search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .kernels import KernelSpec, cross_matrix, gram_matrix, kernel_diag

__all__ = [
    "RegressionProblem",
    "GPPosterior",
    "OptimizerConfig",
    "IllConditionedError",
    "fit",
    "predict",
    "sample_posterior",
    "log_marginal_likelihood",
    "optimize_hyperparameters",
    "optimize_hyperparameters_joint",
    "metrics_rmse_nlpd",
    "finite_difference_gradient",
]

_BASE_JITTER = 1e-8
_MAX_JITTER = 1e-4


class IllConditionedError(RuntimeError):
    """Cholesky failed even after the jitter escalation schedule."""

    def __init__(self, message, final_jitter):
        super().__init__(f"{message} (final jitter tried: {final_jitter:.6g})")
        self.final_jitter = final_jitter


@dataclass
class RegressionProblem:
    """Inputs, n x d targets, noise variance and a kernel spec."""

    inputs: list
    targets: np.ndarray
    noise: float
    kernel: KernelSpec

    def __post_init__(self):
        targets = np.asarray(self.targets, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
        if targets.ndim != 2:
            raise ValueError(f"targets must be an n x d matrix, got ndim {targets.ndim}")
        if targets.shape[0] != len(self.inputs):
            raise ValueError(
                f"targets have {targets.shape[0]} rows for {len(self.inputs)} inputs"
            )
        if targets.shape[1] < 1:
            raise ValueError("targets need at least one output dimension")
        if not (math.isfinite(self.noise) and self.noise >= 0.0):
            raise ValueError(f"noise variance must be finite and >= 0, got {self.noise}")
        self.targets = targets


@dataclass
class GPPosterior:
    """Fitted state: training inputs, Cholesky factor L and weights alpha."""

    inputs: list
    kernel: KernelSpec
    noise: float
    jitter: float
    L: np.ndarray
    alpha: np.ndarray


def _jitter_cholesky(K, noise, base_scale):
    """Cholesky of K + (noise + jitter) I with the doubling jitter schedule.

    jitter starts at 1e-8 * base_scale and doubles until it would exceed
    1e-4 * base_scale, at which point IllConditionedError is raised with
    the final jitter tried.
    """
    scale = base_scale if base_scale > 0.0 else 1.0
    jitter = _BASE_JITTER * scale
    limit = _MAX_JITTER * scale
    n = K.shape[0]
    idx = np.diag_indices(n)
    while True:
        A = K.copy()
        A[idx] += noise + jitter
        try:
            c, _ = cho_factor(A, lower=True)
        except np.linalg.LinAlgError:
            c = None
        if c is not None:
            return np.tril(c), jitter
        if jitter * 2.0 > limit:
            raise IllConditionedError(
                "Gram matrix is not positive definite after jitter escalation",
                jitter,
            )
        jitter *= 2.0


def _factorize(problem):
    K = gram_matrix(problem.kernel, problem.inputs, 0.0)
    # sigma^2_total proxy: mean prior variance (diagonal is input-dependent
    # for the dot-product kernels)
    base_scale = float(np.mean(np.diag(K)))
    L, jitter = _jitter_cholesky(K, problem.noise, base_scale)
    return L, jitter


def fit(problem):
    """Fit the posterior: one Cholesky shared by all d output dimensions."""
    L, jitter = _factorize(problem)
    alpha = cho_solve((L, True), problem.targets)
    return GPPosterior(
        inputs=list(problem.inputs),
        kernel=problem.kernel,
        noise=problem.noise,
        jitter=jitter,
        L=L,
        alpha=alpha,
    )


def predict(post, query):
    """Posterior mean (m x d) and per-point variance (m,) at the query inputs.

    The variance is the diagonal of the predictive covariance of the
    latent function (no noise added), shared across output dimensions,
    clamped at zero.
    """
    Ks = cross_matrix(post.kernel, post.inputs, query)
    mean = Ks.T @ post.alpha
    V = solve_triangular(post.L, Ks, lower=True)
    var = kernel_diag(post.kernel, query) - np.sum(V * V, axis=0)
    return mean, np.maximum(var, 0.0)


def sample_posterior(post, query, count, seed):
    """Joint samples from the predictive distribution: (count, m, d) tensor.

    Uses the full m x m predictive covariance per output dimension
    (plus 1e-10 jitter for the factorization); deterministic per seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    Ks = cross_matrix(post.kernel, post.inputs, query)
    mean = Ks.T @ post.alpha
    V = solve_triangular(post.L, Ks, lower=True)
    C = gram_matrix(post.kernel, query, 0.0) - V.T @ V
    C = np.triu(C)
    C = C + np.triu(C, 1).T
    C[np.diag_indices_from(C)] += 1e-10
    try:
        c, _ = cho_factor(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            "predictive covariance is not positive definite", 1e-10
        ) from exc
    Lc = np.tril(c)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, C.shape[0], mean.shape[1]))
    return mean[None, :, :] + np.einsum("jk,skd->sjd", Lc, z)


def log_marginal_likelihood(problem):
    """Sum over output dimensions of the Gaussian log marginal likelihood."""
    L, _ = _factorize(problem)
    alpha = cho_solve((L, True), problem.targets)
    n, d = problem.targets.shape
    quad = float(np.sum(problem.targets * alpha))
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * quad - 0.5 * d * logdet - 0.5 * d * n * math.log(2.0 * math.pi)


def metrics_rmse_nlpd(predictions, truth, noise):
    """RMSE and mean negative log predictive density over all entries.

    predictions is a (mean, variance) pair as returned by predict; the
    noise variance is added to the predictive variance for the density.
    """
    mean, var = predictions
    mean = np.asarray(mean, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if mean.shape != truth.shape:
        raise ValueError(f"shape mismatch: predictions {mean.shape} vs truth {truth.shape}")
    v = np.asarray(var, dtype=np.float64)[:, None] + noise
    if np.any(v <= 0.0):
        raise ValueError("predictive variance plus noise must be positive")
    err = mean - truth
    rmse = float(np.sqrt(np.mean(err * err)))
    nlpd = float(np.mean(0.5 * np.log(2.0 * math.pi * v) + (err * err) / (2.0 * v)))
    return rmse, nlpd


# ---------------------------------------------------------------------------
# hyperparameter optimization
# ---------------------------------------------------------------------------


@dataclass
class OptimizerConfig:
    max_iters: int = 200
    grad_tol: float = 1e-5
    fd_step: float = 1e-5
    initial_step: float = 0.1
    min_step: float = 1e-12
    # largest accepted move in log-parameter space per iteration; keeps a
    # steep early gradient from vaulting over the good likelihood basin
    max_step: float = 1.0


def finite_difference_gradient(fun, x, step):
    """Central finite-difference gradient of fun at x with the given step."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * step)
    return g


def _ascend(objective, x0, config):
    """Gradient ascent with backtracking line search; returns (x, trace).

    Only strict improvements are accepted, so the trace of objective
    values is non-decreasing by construction.
    """
    x = np.asarray(x0, dtype=np.float64)
    f = objective(x)
    if not math.isfinite(f):
        raise ValueError(f"objective is not finite at the initial parameters ({f})")
    trace = [f]
    if x.size == 0:
        return x, trace
    step = config.initial_step
    for _ in range(config.max_iters):
        g = finite_difference_gradient(objective, x, config.fd_step)
        if not np.all(np.isfinite(g)):
            break
        gnorm = np.max(np.abs(g))
        if gnorm < config.grad_tol:
            break
        step = min(step, config.max_step / gnorm)
        accepted = False
        while step >= config.min_step:
            x_new = x + step * g
            f_new = objective(x_new)
            if math.isfinite(f_new) and f_new > f:
                x, f = x_new, f_new
                trace.append(f)
                accepted = True
                step = min(step * 2.0, 1.0)
                break
            step *= 0.5
        if not accepted:
            break
    return x, trace


def _pack(spec, noise, names):
    values = []
    for name in names:
        if name == "noise":
            if noise <= 0.0:
                raise ValueError("noise must be positive to optimize it in log space")
            values.append(noise)
        else:
            values.append(spec.get_param(name))
    return np.log(np.asarray(values, dtype=np.float64))


def _unpack(spec, noise, names, logx):
    # overlong line-search steps overflow exp; the caller treats the
    # resulting invalid spec as objective -inf
    with np.errstate(over="ignore"):
        values = np.exp(logx)
    for name, value in zip(names, values):
        if name == "noise":
            noise = float(value)
        else:
            spec = spec.with_param(name, float(value))
    return spec, noise


def _free_names(free):
    if isinstance(free, (set, frozenset)):
        return sorted(free)
    return list(free)


def optimize_hyperparameters(problem, free, config=None):
    """Maximize the log marginal likelihood over the named parameters.

    free is a collection of parameter names ("lengthscale",
    "translation.magnitude", ..., and "noise"); all are
    positive-constrained and optimized in log space.  Returns the
    updated kernel spec, the noise variance, and the trace of objective
    values along the accepted steps.
    """
    return optimize_hyperparameters_joint([problem], free, config)


def optimize_hyperparameters_joint(problems, free, config=None):
    """As optimize_hyperparameters, over the sum of per-problem likelihoods.

    Every problem must share the same kernel spec and noise variance;
    the summed objective learns one hyperparameter set jointly.
    """
    if not problems:
        raise ValueError("need at least one problem")
    config = config or OptimizerConfig()
    names = _free_names(free)
    spec0 = problems[0].kernel
    noise0 = problems[0].noise

    def objective(logx):
        # invalid proposals (overflowed params, non-PD Gram) score -inf and
        # are rejected by the line search; their float warnings are noise
        with np.errstate(all="ignore"):
            try:
                spec, noise = _unpack(spec0, noise0, names, logx)
                total = 0.0
                for prob in problems:
                    total += log_marginal_likelihood(
                        replace(prob, noise=noise, kernel=spec)
                    )
            except (IllConditionedError, ValueError):
                return -np.inf
        return total

    x0 = _pack(spec0, noise0, names)
    x, trace = _ascend(objective, x0, config)
    spec, noise = _unpack(spec0, noise0, names, x)
    return spec, noise, trace
