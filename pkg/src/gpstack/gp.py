"""Exact Gaussian process regression on top of the kernel trees.

Training minimizes the negative log marginal likelihood over log
hyperparameters (kernel parameters plus observation noise) with L-BFGS-B
from several start points; the first start is the configured kernel, the
rest are drawn log-uniformly at scales set by the data. Targets are
standardized inside fit so a zero prior mean is sensible; predictions are
mapped back to original units.

Everything here works for any kernel exposing the tree interface,
including the grouped product kernel over stacked feature rows.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.spatial.distance

from . import linalg
from .errors import NotPositiveDefinite, TooFewPoints
from .kernels import Kernel, _as_points

LOG2PI = math.log(2.0 * math.pi)

# objective value handed to the optimizer when a proposal is unfactorizable
_BAD_NLML = 1e25


@dataclass(frozen=True)
class OptConfig:
    """Hyperparameter optimization settings.

    freeze_period pins every period parameter at its configured value,
    regardless of per-kernel flags; init_noise_variance and noise_floor are
    relative to the standardized target scale. Raising noise_floor keeps the
    optimizer from explaining short noisy series as near-noiseless functions
    that interpolate every observation.
    """

    restarts: int = 3
    max_iter: int = 200
    tol: float = 1e-9
    seed: int = 0
    freeze_period: bool = True
    init_noise_variance: float = 0.1
    noise_floor: float = 1e-8


@dataclass(frozen=True)
class GPHyperparams:
    kernel_theta: np.ndarray
    log_noise: float

    @property
    def noise_variance(self) -> float:
        return float(np.exp(self.log_noise))


@dataclass(frozen=True)
class GPModel:
    """Fitted GP: kernel with final hyperparameters plus cached solves.

    alpha solves (K + noise*I) alpha = standardized targets, so predictive
    means are a single matrix-vector product. degenerate marks an
    all-identical target vector (noise unidentifiable; fit still returns).
    """

    kernel: Kernel
    noise_variance: float
    train_inputs: np.ndarray
    train_targets: np.ndarray
    target_mean: float
    target_scale: float
    chol: linalg.CholFactor
    alpha: np.ndarray
    nlml_value: float
    degenerate: bool = False
    restart_nlmls: tuple = ()

    @property
    def hyper(self) -> GPHyperparams:
        return GPHyperparams(self.kernel.theta(), math.log(self.noise_variance))


@dataclass(frozen=True)
class PredictiveDist:
    """Gaussian predictive marginals in original target units."""

    mean: np.ndarray
    variance: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray

    def __len__(self):
        return self.mean.size


def _coerce(inputs, targets):
    X = _as_points(inputs)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise TooFewPoints(f"{X.shape[0]} inputs vs {y.size} targets")
    return X, y


def nlml(kernel: Kernel, inputs, targets, noise_variance: float) -> float:
    """Negative log marginal likelihood of the targets as given."""
    X, y = _coerce(inputs, targets)
    n = y.size
    fac = linalg.cholesky(kernel.gram(X) + noise_variance * np.eye(n))
    alpha = linalg.solve_chol(fac, y)
    return 0.5 * float(y @ alpha) + 0.5 * linalg.logdet(fac) + 0.5 * n * LOG2PI


def nlml_grad(kernel: Kernel, inputs, targets, noise_variance: float) -> np.ndarray:
    """Gradient of nlml w.r.t. [kernel log-params..., log noise variance]."""
    X, y = _coerce(inputs, targets)
    _, grad = _nlml_value_and_grad(kernel, X, y, noise_variance)
    return grad


def _nlml_value_and_grad(kernel, X, y, noise_variance):
    n = y.size
    K, dKs = kernel.gram_with_grads(X)
    fac = linalg.cholesky(K + noise_variance * np.eye(n))
    alpha = linalg.solve_chol(fac, y)
    value = 0.5 * float(y @ alpha) + 0.5 * linalg.logdet(fac) + 0.5 * n * LOG2PI

    # d/dtheta = 0.5 tr((K^-1 - alpha alpha^T) dK/dtheta); dK for the log
    # noise entry is noise*I, so its term reduces to the trace below
    Q = linalg.inv_from_chol(fac) - np.outer(alpha, alpha)
    grad = np.empty(len(dKs) + 1)
    for d, dK in enumerate(dKs):
        grad[d] = 0.5 * float(np.sum(Q * dK))
    grad[-1] = 0.5 * float(np.trace(Q)) * noise_variance
    return value, grad


def _param_kinds(kernel):
    # the pure periodic lengthscale is a dimensionless roughness knob, not a
    # distance; it gets its own bounds ("warp") so input-unit limits never
    # apply to it
    kinds = []
    for name in kernel.param_names():
        if name.endswith("periodic.log_lengthscale"):
            kinds.append("warp")
        elif name.endswith("log_lengthscale"):
            kinds.append("lengthscale")
        elif name.endswith("log_period"):
            kinds.append("period")
        else:
            kinds.append("amplitude")
    return kinds


def _input_span(X) -> float:
    span = float((X.max(axis=0) - X.min(axis=0)).max()) if X.size else 0.0
    return span if span > 0.0 else 1.0


def _min_gap(X) -> float:
    """Smallest positive pairwise distance; lengthscales below it are noise."""
    n = X.shape[0]
    if n > 3000:
        X = X[np.random.default_rng(0).choice(n, size=3000, replace=False)]
    d = scipy.spatial.distance.pdist(X)
    d = d[d > 0.0]
    return float(d.min()) if d.size else 0.0


def _bounds(kinds, span, theta0, min_gap, noise_floor):
    out = []
    lo_len = math.log(max(1e-3 * span, min_gap))
    for kind, t0 in zip(kinds, theta0):
        if kind == "lengthscale":
            out.append((min(lo_len, t0), math.log(1e3 * span)))
        elif kind == "warp":
            out.append((math.log(1e-2), math.log(1e3)))
        elif kind == "period":
            # identifiable range: above the sampling step, below the window,
            # widened so the configured start is always interior
            lo = min(math.log(2.0), t0 - math.log(2.0))
            hi = max(math.log(4.0 * span), t0 + math.log(2.0))
            out.append((lo, hi))
        else:
            out.append((math.log(1e-6), math.log(1e6)))
    out.append((math.log(noise_floor), math.log(10.0)))  # noise on standardized targets
    return out


def _restart_start(kinds, theta0_full, rng, span, noise_floor):
    """Random start in log space; periods stay at their configured value."""
    start = theta0_full.copy()
    for i, kind in enumerate(kinds):
        if kind == "amplitude":
            start[i] = rng.uniform(math.log(0.1), math.log(10.0))
        elif kind == "lengthscale":
            start[i] = rng.uniform(math.log(0.5 * span), math.log(2.0 * span))
        elif kind == "warp":
            start[i] = rng.uniform(math.log(0.3), math.log(3.0))
    lo_noise = math.log(max(1e-4, noise_floor))
    start[-1] = rng.uniform(lo_noise, max(math.log(1.0), lo_noise + math.log(10.0)))
    return start


def target_stats(targets):
    """Standardization statistics: (mean, scale, degenerate flag).

    All-identical targets get scale 1 and the degenerate flag, so the
    standardized vector is zero rather than NaN. Artifact reload uses this
    too, so fitted and rebuilt models standardize bit-identically.
    """
    y = np.asarray(targets, dtype=np.float64).ravel()
    mean = float(np.mean(y))
    scale = float(np.std(y))
    degenerate = not scale > 1e-12 * max(1.0, abs(mean))
    return mean, (1.0 if degenerate else scale), degenerate


def fit(kernel: Kernel, inputs, targets, opt: OptConfig = OptConfig()) -> GPModel:
    """Optimize hyperparameters and return the fitted model.

    Deterministic given opt.seed. Restart 0 starts from the configured
    kernel values; unfactorizable proposals are scored arbitrarily badly
    rather than aborting the line search.
    """
    X, y = _coerce(inputs, targets)
    n = y.size
    if n < 2:
        raise TooFewPoints(f"need at least 2 training points, got {n}")

    target_mean, target_scale, degenerate = target_stats(y)
    y_std = (y - target_mean) / target_scale

    if not opt.noise_floor > 0.0:
        raise ValueError(f"noise_floor must be positive, got {opt.noise_floor}")

    kinds = _param_kinds(kernel)
    span = _input_span(X)
    init_noise = max(opt.init_noise_variance, opt.noise_floor)
    theta0_full = np.append(kernel.theta(), math.log(init_noise))
    mask = np.append(kernel.trainable(), True)
    if opt.freeze_period:
        mask[:-1] &= np.array([k != "period" for k in kinds], dtype=bool)
    bounds = [
        b
        for b, m in zip(_bounds(kinds, span, theta0_full, _min_gap(X), opt.noise_floor), mask)
        if m
    ]

    def objective(x):
        full = theta0_full.copy()
        full[mask] = x
        try:
            value, grad = _nlml_value_and_grad(
                kernel.with_theta(full[:-1]), X, y_std, math.exp(full[-1])
            )
        except NotPositiveDefinite:
            return _BAD_NLML, np.zeros(int(mask.sum()))
        if not np.isfinite(value):
            return _BAD_NLML, np.zeros(int(mask.sum()))
        return value, grad[mask]

    rng = np.random.default_rng(opt.seed)
    best_full, best_value = None, np.inf
    restart_values = []
    for r in range(max(1, opt.restarts)):
        start_full = (
            theta0_full
            if r == 0
            else _restart_start(kinds, theta0_full, rng, span, opt.noise_floor)
        )
        res = scipy.optimize.minimize(
            objective,
            start_full[mask],
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": opt.max_iter, "ftol": opt.tol, "gtol": 1e-6},
        )
        value = float(res.fun)
        restart_values.append(value)
        if np.isfinite(value) and value < best_value:
            best_value = value
            best_full = theta0_full.copy()
            best_full[mask] = res.x
    if best_full is None:
        raise NotPositiveDefinite("every optimizer restart failed to factor the kernel matrix")

    final_kernel = kernel.with_theta(best_full[:-1])
    noise_variance = math.exp(best_full[-1])
    return build_model(
        final_kernel,
        X,
        y,
        noise_variance,
        target_mean=target_mean,
        target_scale=target_scale,
        degenerate=degenerate,
        nlml_value=best_value,
        restart_nlmls=tuple(restart_values),
    )


def build_model(
    kernel: Kernel,
    inputs,
    targets,
    noise_variance: float,
    target_mean=None,
    target_scale=None,
    degenerate=False,
    nlml_value=None,
    restart_nlmls=(),
) -> GPModel:
    """Assemble a GPModel at fixed hyperparameters (no optimization).

    With target_mean/target_scale omitted the targets are used raw
    (mean 0, scale 1), which is what the closed-form oracles expect.
    """
    X, y = _coerce(inputs, targets)
    if target_mean is None:
        target_mean = 0.0
    if target_scale is None:
        target_scale = 1.0
    y_std = (y - target_mean) / target_scale
    fac = linalg.cholesky(kernel.gram(X) + noise_variance * np.eye(y.size))
    alpha = linalg.solve_chol(fac, y_std)
    if nlml_value is None:
        nlml_value = (
            0.5 * float(y_std @ alpha) + 0.5 * linalg.logdet(fac) + 0.5 * y.size * LOG2PI
        )
    return GPModel(
        kernel=kernel,
        noise_variance=float(noise_variance),
        train_inputs=X,
        train_targets=y,
        target_mean=float(target_mean),
        target_scale=float(target_scale),
        chol=fac,
        alpha=alpha,
        nlml_value=float(nlml_value),
        degenerate=degenerate,
        restart_nlmls=restart_nlmls,
    )


def predict(model: GPModel, test_inputs, include_noise: bool = True) -> PredictiveDist:
    """Predictive marginals at the test inputs, in original target units.

    include_noise adds the learned observation noise to every variance;
    switch it off for the latent function's own uncertainty.
    """
    Xs = _as_points(test_inputs)
    Ks = model.kernel.gram(Xs, model.train_inputs)
    mean_std = Ks @ model.alpha
    V = linalg.solve_lower(model.chol, Ks.T)
    var_std = model.kernel.diag(Xs) - np.sum(V * V, axis=0)
    if include_noise:
        var_std = var_std + model.noise_variance
    var_std = np.maximum(var_std, 1e-12)  # cancellation guard

    mean = mean_std * model.target_scale + model.target_mean
    variance = var_std * model.target_scale**2
    half = 1.96 * np.sqrt(variance)
    return PredictiveDist(
        mean=mean, variance=variance, lower95=mean - half, upper95=mean + half
    )
