"""Exact-inference oracles: likelihood values, gradients, and conditioning."""

import math

import numpy as np
import pytest
import scipy.stats

from gpstack import gp
from gpstack.errors import TooFewPoints
from gpstack.kernels import Periodic, SquaredExponential, Sum, TiedSeasonal

LOG2PI = math.log(2.0 * math.pi)


def brute_force_predict(kernel, X, y, noise, Xs, include_noise=True):
    """Conditioning a joint Gaussian the long way, with numpy.linalg only."""
    K = kernel.gram(X) + noise * np.eye(len(X))
    Ks = kernel.gram(Xs, X)
    Kinv = np.linalg.inv(K)
    mean = Ks @ Kinv @ np.asarray(y, dtype=np.float64)
    cov = kernel.gram(Xs) - Ks @ Kinv @ Ks.T
    var = np.diag(cov).copy()
    if include_noise:
        var += noise
    return mean, var


# --- likelihood values ---


def test_single_point_zero_target():
    # k(0,0)=1 and unit noise: 0.5*log(2) + 0.5*log(2*pi), no data term
    value = gp.nlml(SquaredExponential(), [0.0], [0.0], 1.0)
    assert value == pytest.approx(0.5 * math.log(2.0) + 0.5 * LOG2PI, rel=1e-12)


def test_single_point_nonzero_target():
    # adds the quadratic term 0.5 * 4 / 2 = 1
    value = gp.nlml(SquaredExponential(), [0.0], [2.0], 1.0)
    assert value == pytest.approx(1.0 + 0.5 * math.log(2.0) + 0.5 * LOG2PI, rel=1e-12)


def test_nlml_matches_dense_gaussian_logpdf():
    rng = np.random.default_rng(0)
    kernels = [
        SquaredExponential(1.3, 2.0),
        Periodic(0.9, 1.2, 12.0),
        TiedSeasonal(1.5, 3.0),
        Sum(SquaredExponential(), Periodic(0.5, 1.0, 6.0)),
    ]
    for trial in range(12):
        n = int(rng.integers(2, 12))
        X = np.sort(rng.uniform(0, 36, size=n))
        y = rng.standard_normal(n)
        noise = float(rng.uniform(0.05, 1.5))
        kernel = kernels[trial % len(kernels)]
        cov = kernel.gram(X) + noise * np.eye(n)
        want = -scipy.stats.multivariate_normal(mean=np.zeros(n), cov=cov).logpdf(y)
        assert gp.nlml(kernel, X, y, noise) == pytest.approx(want, rel=1e-8)


# --- likelihood gradients ---


def fd_nlml_grad(kernel, X, y, noise, h=1e-5):
    full = np.append(kernel.theta(), math.log(noise))

    def value(v):
        return gp.nlml(kernel.with_theta(v[:-1]), X, y, math.exp(v[-1]))

    out = np.empty_like(full)
    for i in range(full.size):
        up, dn = full.copy(), full.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (value(up) - value(dn)) / (2 * h)
    return out


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for kernel in (
        SquaredExponential(1.2, 2.5),
        Periodic(0.8, 1.3, 12.0),
        TiedSeasonal(1.1, 2.0),
        Sum(SquaredExponential(0.7, 4.0), Periodic(1.4, 0.9, 9.0)),
    ):
        n = 10
        X = np.sort(rng.uniform(0, 30, size=n))
        y = rng.standard_normal(n)
        noise = 0.3
        analytic = gp.nlml_grad(kernel, X, y, noise)
        numeric = fd_nlml_grad(kernel, X, y, noise)
        assert analytic.size == kernel.n_params + 1
        for a, f in zip(analytic, numeric):
            assert a == pytest.approx(f, rel=1e-5, abs=1e-8)


def test_noise_gradient_negative_when_noise_underestimated():
    # pure-noise targets with sigma_n^2 far too small: raising it must help
    rng = np.random.default_rng(2)
    X = np.arange(20.0)
    y = rng.standard_normal(20)
    grad = gp.nlml_grad(SquaredExponential(), X, y, 1e-6)
    assert grad[-1] < 0.0


# --- conditioning ---


def test_predict_matches_hand_conditioning():
    kernel = SquaredExponential(1.0, 2.0)
    X = np.array([0.0, 1.0, 3.0])
    y = np.array([0.5, -0.2, 0.8])
    noise = 0.1
    model = gp.build_model(kernel, X, y, noise)
    dist = gp.predict(model, [1.5, 4.0])
    mean, var = brute_force_predict(kernel, X, y, noise, np.array([1.5, 4.0]))
    np.testing.assert_allclose(dist.mean, mean, rtol=1e-8)
    np.testing.assert_allclose(dist.variance, var, rtol=1e-8)
    np.testing.assert_allclose(dist.lower95, dist.mean - 1.96 * np.sqrt(dist.variance))
    np.testing.assert_allclose(dist.upper95, dist.mean + 1.96 * np.sqrt(dist.variance))


def test_predict_matches_brute_force_on_random_problems():
    rng = np.random.default_rng(3)
    for trial in range(20):
        n = int(rng.integers(2, 9))
        kernel = [
            SquaredExponential(1.5, 1.0),
            Periodic(1.0, 1.5, 12.0),
            TiedSeasonal(0.8, 2.0),
        ][trial % 3]
        X = np.sort(rng.uniform(0, 24, size=n))
        y = rng.standard_normal(n)
        Xs = rng.uniform(-2, 30, size=4)
        noise = float(rng.uniform(0.05, 0.8))
        include_noise = bool(trial % 2)
        model = gp.build_model(kernel, X, y, noise)
        dist = gp.predict(model, Xs, include_noise=include_noise)
        mean, var = brute_force_predict(kernel, X, y, noise, Xs, include_noise)
        np.testing.assert_allclose(dist.mean, mean, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(dist.variance, var, rtol=1e-8, atol=1e-10)


def test_interpolates_with_tiny_noise():
    X = np.arange(8.0)
    y = np.sin(X)
    model = gp.build_model(SquaredExponential(1.0, 1.5), X, y, 1e-10)
    dist = gp.predict(model, X, include_noise=False)
    np.testing.assert_allclose(dist.mean, y, atol=1e-5)


def test_far_field_reverts_to_prior():
    X = np.arange(5.0)
    y = np.array([3.0, 4.0, 5.0, 4.0, 3.0])
    mean, scale, _ = gp.target_stats(y)
    model = gp.build_model(
        SquaredExponential(1.0, 1.0), X, y, 0.2, target_mean=mean, target_scale=scale
    )
    dist = gp.predict(model, [500.0])
    assert dist.mean[0] == pytest.approx(mean, rel=1e-9)
    assert dist.variance[0] == pytest.approx((1.0 + 0.2) * scale**2, rel=1e-9)


def test_variance_shrinks_as_training_points_accumulate():
    rng = np.random.default_rng(4)
    X = np.sort(rng.uniform(0, 12, size=10))
    y = rng.standard_normal(10)
    kernel = TiedSeasonal(1.0, 2.0)
    Xs = np.linspace(0, 14, 9)
    prev = None
    for n in (3, 6, 10):
        model = gp.build_model(kernel, X[:n], y[:n], 0.1)
        var = gp.predict(model, Xs).variance
        if prev is not None:
            assert np.all(var <= prev + 1e-10)
        prev = var


def test_duplicated_training_point_does_not_crash():
    model = gp.build_model(SquaredExponential(), [2.0, 2.0, 5.0], [1.0, 1.3, 0.0], 0.05)
    dist = gp.predict(model, [2.0, 3.0])
    assert np.all(np.isfinite(dist.mean))
    assert np.all(dist.variance > 0.0)


# --- fitting ---


def test_fit_requires_two_points():
    with pytest.raises(TooFewPoints):
        gp.fit(SquaredExponential(), [1.0], [2.0])


def test_fit_reaches_a_stationary_point():
    rng = np.random.default_rng(5)
    X = np.arange(40.0)
    truth = gp.build_model(SquaredExponential(1.0, 4.0), [0.0], [0.0], 1e-12)
    K = SquaredExponential(1.0, 4.0).gram(X) + 1e-10 * np.eye(40)
    y = np.linalg.cholesky(K) @ rng.standard_normal(40) + 0.1 * rng.standard_normal(40)
    opt = gp.OptConfig(restarts=2, max_iter=300, tol=1e-12, seed=0)
    model = gp.fit(SquaredExponential(), X, y, opt)
    y_std = (y - model.target_mean) / model.target_scale
    grad = gp.nlml_grad(model.kernel, X, y_std, model.noise_variance)
    assert np.linalg.norm(grad) < 1e-4


def test_fit_recovers_known_lengthscale():
    rng = np.random.default_rng(6)
    true_ell = 4.0
    X = np.arange(60.0)
    K = SquaredExponential(1.0, true_ell).gram(X) + 1e-10 * np.eye(60)
    y = np.linalg.cholesky(K) @ rng.standard_normal(60) + 0.05 * rng.standard_normal(60)
    model = gp.fit(SquaredExponential(), X, y, gp.OptConfig(restarts=3, max_iter=300, seed=0))
    fitted_ell = model.kernel.lengthscale
    assert abs(fitted_ell - true_ell) <= 0.25 * true_ell


def test_fit_attributes_white_noise_to_the_noise_term():
    rng = np.random.default_rng(7)
    X = np.arange(80.0)
    y = rng.normal(0.0, 2.0, size=80)
    model = gp.fit(SquaredExponential(), X, y, gp.OptConfig(restarts=3, max_iter=200, seed=0))
    recovered = model.noise_variance * model.target_scale**2
    # at least 80% of the observed variance lands in the noise term, not the kernel
    assert recovered >= 0.8 * y.var()
    assert recovered <= 1.1 * y.var()


def test_fit_noise_floor_binds_on_smooth_data():
    # a noiseless sinusoid invites near-zero noise; the floor must hold it up
    X = np.arange(30.0)
    y = np.sin(2 * np.pi * X / 12.0)
    opt = gp.OptConfig(restarts=2, max_iter=150, seed=0, noise_floor=0.05)
    model = gp.fit(TiedSeasonal(), X, y, opt)
    assert model.noise_variance >= 0.05 - 1e-12


def test_fit_noise_floor_leaves_noisy_data_alone():
    rng = np.random.default_rng(13)
    X = np.arange(60.0)
    y = rng.normal(0.0, 1.0, size=60)
    base = gp.OptConfig(restarts=2, max_iter=150, seed=0)
    floored = gp.fit(SquaredExponential(), X, y, gp.OptConfig(
        restarts=2, max_iter=150, seed=0, noise_floor=0.01))
    plain = gp.fit(SquaredExponential(), X, y, base)
    # white noise fits near variance 1 either way, far above the floor
    assert floored.noise_variance == pytest.approx(plain.noise_variance, rel=1e-6)


def test_fit_rejects_nonpositive_noise_floor():
    with pytest.raises(ValueError):
        gp.fit(
            SquaredExponential(),
            np.arange(5.0),
            np.ones(5),
            gp.OptConfig(noise_floor=0.0),
        )


def test_fit_keeps_best_restart():
    rng = np.random.default_rng(8)
    X = np.arange(25.0)
    y = np.sin(2 * np.pi * X / 12.0) + 0.1 * rng.standard_normal(25)
    model = gp.fit(TiedSeasonal(), X, y, gp.OptConfig(restarts=4, max_iter=150, seed=0))
    finite = [v for v in model.restart_nlmls if np.isfinite(v)]
    assert len(model.restart_nlmls) == 4
    assert model.nlml_value == pytest.approx(min(finite))


def test_fit_is_deterministic_given_seed():
    rng = np.random.default_rng(9)
    X = np.arange(20.0)
    y = rng.standard_normal(20)
    opt = gp.OptConfig(restarts=2, max_iter=100, seed=42)
    a = gp.fit(SquaredExponential(), X, y, opt)
    b = gp.fit(SquaredExponential(), X, y, opt)
    assert np.array_equal(a.kernel.theta(), b.kernel.theta())
    assert a.noise_variance == b.noise_variance


def test_fit_predictions_transform_affinely_with_targets():
    rng = np.random.default_rng(10)
    X = np.arange(24.0)
    y = np.sin(2 * np.pi * X / 12.0) + 0.2 * rng.standard_normal(24)
    a, b = 3.5, -40.0
    opt = gp.OptConfig(restarts=2, max_iter=200, seed=0)
    base = gp.predict(gp.fit(TiedSeasonal(), X, y, opt), [25.0, 30.0])
    scaled = gp.predict(gp.fit(TiedSeasonal(), X, a * y + b, opt), [25.0, 30.0])
    np.testing.assert_allclose(scaled.mean, a * base.mean + b, rtol=1e-6)
    np.testing.assert_allclose(scaled.variance, a**2 * base.variance, rtol=1e-6)


def test_fit_flags_constant_targets_as_degenerate():
    model = gp.fit(SquaredExponential(), np.arange(6.0), np.full(6, 7.0))
    assert model.degenerate
    dist = gp.predict(model, [2.5])
    assert dist.mean[0] == pytest.approx(7.0, abs=1e-6)


def test_identical_points_and_targets_fit_without_crash():
    model = gp.fit(SquaredExponential(), [1.0, 1.0], [3.0, 3.0], gp.OptConfig(restarts=1))
    assert np.isfinite(model.nlml_value)


def test_build_model_defaults_to_raw_targets():
    model = gp.build_model(SquaredExponential(), [0.0, 1.0], [5.0, 6.0], 0.1)
    assert model.target_mean == 0.0
    assert model.target_scale == 1.0
