"""Covariance functions for both model stages.

Kernels form expression trees: squared-exponential, periodic, and constant
primitives combined with Sum and Product. Hyperparameters are stored and
optimized as logarithms, flattened in pre-order over the tree; each node
also reports a trainable mask so entries like a frozen period ride along
in the vector without being optimized.

The grouped product kernel over stacked feature vectors lives here too.
It multiplies one primitive factor per column, with hyperparameters shared
inside each named column group, so a group of p lag columns costs two
parameters rather than 2p.

All nodes are immutable; ``with_theta`` builds a fresh tree. Gram
evaluation and the analytic gradients share the same backend distance
matrices, so values seen by the optimizer match values seen at predict
time.
"""

from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import ConfigError, DimensionMismatch, LayoutMismatch


def _as_points(x):
    """Coerce to an (n, d) float array; 1-D input means n points on the line."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None]
    elif x.ndim != 2:
        raise DimensionMismatch(f"points must be at most 2-D, got shape {x.shape}")
    # compiled backend requires C-contiguous rows
    return np.ascontiguousarray(x)


def _positive(name, value):
    value = float(value)
    if not value > 0.0:
        raise ConfigError(f"{name} must be strictly positive, got {value!r}")
    return value


def _rest_products(values):
    """For each matrix in ``values``, the elementwise product of all others."""
    ones = np.ones_like(values[0])
    prefix = [ones]
    for v in values[:-1]:
        prefix.append(prefix[-1] * v)
    suffix = [ones]
    for v in values[:0:-1]:
        suffix.append(suffix[-1] * v)
    suffix.reverse()
    return [p * s for p, s in zip(prefix, suffix)]


class Kernel:
    """Node in a covariance expression tree."""

    def gram(self, X, Y=None):
        """Covariance matrix between point sets; Y=None means X against itself."""
        X = _as_points(X)
        if Y is None:
            return self._gram(X, X)
        Y = _as_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise DimensionMismatch(
                f"point sets have dimensions {X.shape[1]} and {Y.shape[1]}"
            )
        return self._gram(X, Y)

    def gram_with_grads(self, X):
        """Symmetric Gram plus one matrix per log-parameter, pre-order."""
        return self._gram_grads(_as_points(X))

    def diag(self, X):
        """Prior variance k(x, x) per row, without forming the full Gram."""
        return self._diag(_as_points(X))

    def value(self, a, b) -> float:
        """Scalar covariance between two single points."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        return float(self.gram(a, b)[0, 0])

    def with_theta(self, theta) -> "Kernel":
        """Rebuild the tree from a flat log-parameter vector."""
        theta = np.asarray(theta, dtype=np.float64)
        node, used = self._consume(theta, 0)
        if used != theta.size:
            raise DimensionMismatch(f"theta has {theta.size} entries, kernel takes {used}")
        return node

    @property
    def n_params(self) -> int:
        return self.theta().size

    def theta(self) -> np.ndarray:
        raise NotImplementedError

    def trainable(self) -> np.ndarray:
        raise NotImplementedError

    def param_names(self):
        raise NotImplementedError

    def _consume(self, theta, i):
        raise NotImplementedError

    def _gram(self, X, Y):
        raise NotImplementedError

    def _gram_grads(self, X):
        raise NotImplementedError

    def _diag(self, X):
        raise NotImplementedError


class SquaredExponential(Kernel):
    """Smooth stationary kernel: variance * exp(-|a-b|^2 / (2 l^2))."""

    def __init__(self, variance=1.0, lengthscale=1.0):
        self.variance = _positive("variance", variance)
        self.lengthscale = _positive("lengthscale", lengthscale)
        self._logs = np.log([self.variance, self.lengthscale])

    def __repr__(self):
        return f"SquaredExponential(variance={self.variance:g}, lengthscale={self.lengthscale:g})"

    def theta(self):
        return self._logs.copy()

    def trainable(self):
        return np.array([True, True])

    def param_names(self):
        return ["se.log_variance", "se.log_lengthscale"]

    def _consume(self, theta, i):
        node = SquaredExponential(np.exp(theta[i]), np.exp(theta[i + 1]))
        # keep the exact log-space values so theta round-trips bitwise
        node._logs = np.array(theta[i : i + 2], dtype=np.float64)
        return node, i + 2

    def _gram(self, X, Y):
        return backends.se_gram(X, Y, self.variance, self.lengthscale)

    def _gram_grads(self, X):
        K = backends.se_gram(X, X, self.variance, self.lengthscale)
        d2 = backends.pairwise_sqdist(X, X)
        return K, [K.copy(), K * (d2 / self.lengthscale**2)]

    def _diag(self, X):
        return np.full(X.shape[0], self.variance)


class Periodic(Kernel):
    """Exactly periodic kernel in |a-b|, intended for 1-D time inputs.

    variance * exp(-2 sin^2(pi |a-b| / period) / lengthscale^2). The period
    can be frozen so the optimizer keeps it at its configured value.
    """

    def __init__(self, variance=1.0, lengthscale=1.0, period=12.0, freeze_period=False):
        self.variance = _positive("variance", variance)
        self.lengthscale = _positive("lengthscale", lengthscale)
        self.period = _positive("period", period)
        self.freeze_period = bool(freeze_period)
        self._logs = np.log([self.variance, self.lengthscale, self.period])

    def __repr__(self):
        return (
            f"Periodic(variance={self.variance:g}, lengthscale={self.lengthscale:g}, "
            f"period={self.period:g})"
        )

    def theta(self):
        return self._logs.copy()

    def trainable(self):
        return np.array([True, True, not self.freeze_period])

    def param_names(self):
        return ["periodic.log_variance", "periodic.log_lengthscale", "periodic.log_period"]

    def _consume(self, theta, i):
        node = Periodic(
            np.exp(theta[i]), np.exp(theta[i + 1]), np.exp(theta[i + 2]), self.freeze_period
        )
        node._logs = np.array(theta[i : i + 3], dtype=np.float64)
        return node, i + 3

    def _gram(self, X, Y):
        return backends.periodic_gram(X, Y, self.variance, self.lengthscale, self.period)

    def _gram_grads(self, X):
        K = backends.periodic_gram(X, X, self.variance, self.lengthscale, self.period)
        r = np.sqrt(backends.pairwise_sqdist(X, X))
        u = (np.pi / self.period) * r
        l2 = self.lengthscale**2
        d_logl = K * (4.0 * np.sin(u) ** 2 / l2)
        d_logp = K * ((2.0 * np.pi / (l2 * self.period)) * r * np.sin(2.0 * u))
        return K, [K.copy(), d_logl, d_logp]

    def _diag(self, X):
        return np.full(X.shape[0], self.variance)


class Constant(Kernel):
    """Constant covariance: a shared offset variance between all inputs."""

    def __init__(self, value=1.0):
        self.value = _positive("value", value)
        self._logs = np.log([self.value])

    def __repr__(self):
        return f"Constant(value={self.value:g})"

    def theta(self):
        return self._logs.copy()

    def trainable(self):
        return np.array([True])

    def param_names(self):
        return ["const.log_value"]

    def _consume(self, theta, i):
        node = Constant(np.exp(theta[i]))
        node._logs = np.array(theta[i : i + 1], dtype=np.float64)
        return node, i + 1

    def _gram(self, X, Y):
        return np.full((X.shape[0], Y.shape[0]), self.value)

    def _gram_grads(self, X):
        K = np.full((X.shape[0], X.shape[0]), self.value)
        return K, [K.copy()]

    def _diag(self, X):
        return np.full(X.shape[0], self.value)


class TiedSeasonal(Kernel):
    """Periodic-plus-smooth seasonal kernel with one shared lengthscale.

    variance * periodic(lengthscale, period) + unit-amplitude
    squared-exponential(lengthscale): three parameters where the untied
    Sum(Periodic, SquaredExponential) form has four. The amplitude scales
    only the periodic part; target standardization absorbs overall scale.
    """

    def __init__(self, variance=1.0, lengthscale=1.0, period=12.0, freeze_period=False):
        self.variance = _positive("variance", variance)
        self.lengthscale = _positive("lengthscale", lengthscale)
        self.period = _positive("period", period)
        self.freeze_period = bool(freeze_period)
        self._logs = np.log([self.variance, self.lengthscale, self.period])

    def __repr__(self):
        return (
            f"TiedSeasonal(variance={self.variance:g}, lengthscale={self.lengthscale:g}, "
            f"period={self.period:g})"
        )

    def theta(self):
        return self._logs.copy()

    def trainable(self):
        return np.array([True, True, not self.freeze_period])

    def param_names(self):
        return ["seasonal.log_variance", "seasonal.log_lengthscale", "seasonal.log_period"]

    def _consume(self, theta, i):
        node = TiedSeasonal(
            np.exp(theta[i]), np.exp(theta[i + 1]), np.exp(theta[i + 2]), self.freeze_period
        )
        node._logs = np.array(theta[i : i + 3], dtype=np.float64)
        return node, i + 3

    def _gram(self, X, Y):
        P = backends.periodic_gram(X, Y, self.variance, self.lengthscale, self.period)
        E = backends.se_gram(X, Y, 1.0, self.lengthscale)
        return P + E

    def _gram_grads(self, X):
        P = backends.periodic_gram(X, X, self.variance, self.lengthscale, self.period)
        E = backends.se_gram(X, X, 1.0, self.lengthscale)
        d2 = backends.pairwise_sqdist(X, X)
        r = np.sqrt(d2)
        u = (np.pi / self.period) * r
        l2 = self.lengthscale**2
        d_logl = P * (4.0 * np.sin(u) ** 2 / l2) + E * (d2 / l2)
        d_logp = P * ((2.0 * np.pi / (l2 * self.period)) * r * np.sin(2.0 * u))
        return P + E, [P, d_logl, d_logp]

    def _diag(self, X):
        return np.full(X.shape[0], self.variance + 1.0)


class Sum(Kernel):
    """Sum of child kernels; parameters concatenate in child order."""

    def __init__(self, *children):
        if not children:
            raise ConfigError("Sum needs at least one child kernel")
        self.children = tuple(children)

    def __repr__(self):
        return "Sum(" + ", ".join(repr(c) for c in self.children) + ")"

    def theta(self):
        return np.concatenate([c.theta() for c in self.children])

    def trainable(self):
        return np.concatenate([c.trainable() for c in self.children])

    def param_names(self):
        return [f"{i}.{n}" for i, c in enumerate(self.children) for n in c.param_names()]

    def _consume(self, theta, i):
        rebuilt = []
        for c in self.children:
            node, i = c._consume(theta, i)
            rebuilt.append(node)
        return Sum(*rebuilt), i

    def _gram(self, X, Y):
        total = self.children[0]._gram(X, Y)
        for c in self.children[1:]:
            total = total + c._gram(X, Y)
        return total

    def _gram_grads(self, X):
        K = None
        grads = []
        for c in self.children:
            Kc, gc = c._gram_grads(X)
            K = Kc if K is None else K + Kc
            grads.extend(gc)
        return K, grads

    def _diag(self, X):
        total = self.children[0]._diag(X)
        for c in self.children[1:]:
            total = total + c._diag(X)
        return total


class Product(Kernel):
    """Elementwise product of child kernels."""

    def __init__(self, *children):
        if not children:
            raise ConfigError("Product needs at least one child kernel")
        self.children = tuple(children)

    def __repr__(self):
        return "Product(" + ", ".join(repr(c) for c in self.children) + ")"

    def theta(self):
        return np.concatenate([c.theta() for c in self.children])

    def trainable(self):
        return np.concatenate([c.trainable() for c in self.children])

    def param_names(self):
        return [f"{i}.{n}" for i, c in enumerate(self.children) for n in c.param_names()]

    def _consume(self, theta, i):
        rebuilt = []
        for c in self.children:
            node, i = c._consume(theta, i)
            rebuilt.append(node)
        return Product(*rebuilt), i

    def _gram(self, X, Y):
        total = self.children[0]._gram(X, Y)
        for c in self.children[1:]:
            total = total * c._gram(X, Y)
        return total

    def _gram_grads(self, X):
        values = []
        grads = []
        for c in self.children:
            Kc, gc = c._gram_grads(X)
            values.append(Kc)
            grads.append(gc)
        rests = _rest_products(values)
        K = rests[0] * values[0]
        out = []
        for rest, gc in zip(rests, grads):
            out.extend(rest * g for g in gc)
        return K, out

    def _diag(self, X):
        total = self.children[0]._diag(X)
        for c in self.children[1:]:
            total = total * c._diag(X)
        return total


@dataclass(frozen=True)
class Group:
    """One block of stacked-feature columns sharing a single kernel factor.

    The factor applies per column and the block contributes the product
    over its columns, so hyperparameters are shared across the block.
    """

    name: str
    start: int
    stop: int
    factor: Kernel

    @property
    def width(self) -> int:
        return self.stop - self.start


def _group_value_and_aux(group, X, Y):
    """Group Gram plus the intermediates its gradients need."""
    Xs = np.ascontiguousarray(X[:, group.start : group.stop])
    Ys = np.ascontiguousarray(Y[:, group.start : group.stop])
    f = group.factor
    w = group.width
    if isinstance(f, SquaredExponential):
        d2 = backends.pairwise_sqdist(Xs, Ys)
        G = (f.variance**w) * np.exp(d2 * (-0.5 / f.lengthscale**2))
        return G, (d2,)
    if isinstance(f, Periodic):
        # product over columns of per-column periodic factors: the sine
        # terms add up inside one exponential
        S = np.zeros((Xs.shape[0], Ys.shape[0]))
        T = np.zeros_like(S)
        for j in range(w):
            r = np.abs(np.subtract.outer(Xs[:, j], Ys[:, j]))
            u = (np.pi / f.period) * r
            S += np.sin(u) ** 2
            T += r * np.sin(2.0 * u)
        G = (f.variance**w) * np.exp(S * (-2.0 / f.lengthscale**2))
        return G, (S, T)
    if isinstance(f, Constant):
        G = np.full((Xs.shape[0], Ys.shape[0]), f.value**w)
        return G, ()
    raise ConfigError(f"group {group.name!r}: factors must be primitive kernels")


def _group_grads(group, G, aux):
    f = group.factor
    w = group.width
    if isinstance(f, SquaredExponential):
        (d2,) = aux
        return [w * G, G * (d2 / f.lengthscale**2)]
    if isinstance(f, Periodic):
        S, T = aux
        l2 = f.lengthscale**2
        return [w * G, G * (4.0 * S / l2), G * ((2.0 * np.pi / (l2 * f.period)) * T)]
    return [w * G]


class FeatureGroupKernel(Kernel):
    """Product kernel over a partitioned feature vector.

    Groups must tile the columns [0, width) in order with no gaps. Rows
    passed to gram/diag must have exactly ``width`` columns.
    """

    def __init__(self, groups):
        groups = tuple(groups)
        if not groups:
            raise ConfigError("need at least one feature group")
        edge = 0
        for g in groups:
            if not isinstance(g.factor, (SquaredExponential, Periodic, Constant)):
                raise ConfigError(f"group {g.name!r}: factors must be primitive kernels")
            if g.start != edge or g.stop <= g.start:
                raise ConfigError(
                    f"group {g.name!r} covers [{g.start}, {g.stop}), expected to start at {edge}"
                )
            edge = g.stop
        self.groups = groups
        self.width = edge

    def __repr__(self):
        inner = ", ".join(f"{g.name}[{g.start}:{g.stop}]={g.factor!r}" for g in self.groups)
        return f"FeatureGroupKernel({inner})"

    def theta(self):
        return np.concatenate([g.factor.theta() for g in self.groups])

    def trainable(self):
        return np.concatenate([g.factor.trainable() for g in self.groups])

    def param_names(self):
        return [f"{g.name}.{n}" for g in self.groups for n in g.factor.param_names()]

    def _consume(self, theta, i):
        rebuilt = []
        for g in self.groups:
            factor, i = g.factor._consume(theta, i)
            rebuilt.append(Group(g.name, g.start, g.stop, factor))
        return FeatureGroupKernel(rebuilt), i

    def _check_width(self, X):
        if X.shape[1] != self.width:
            raise LayoutMismatch(
                f"feature rows have {X.shape[1]} columns, layout expects {self.width}"
            )

    def _gram(self, X, Y):
        self._check_width(X)
        self._check_width(Y)
        K = None
        for g in self.groups:
            G, _ = _group_value_and_aux(g, X, Y)
            K = G if K is None else K * G
        return K

    def _gram_grads(self, X):
        self._check_width(X)
        values = []
        grads = []
        for g in self.groups:
            G, aux = _group_value_and_aux(g, X, X)
            values.append(G)
            grads.append(_group_grads(g, G, aux))
        rests = _rest_products(values)
        K = rests[0] * values[0]
        out = []
        for rest, gg in zip(rests, grads):
            out.extend(rest * g for g in gg)
        return K, out

    def _diag(self, X):
        self._check_width(X)
        v = 1.0
        for g in self.groups:
            f = g.factor
            amp = f.value if isinstance(f, Constant) else f.variance
            v *= amp**g.width
        return np.full(X.shape[0], v)


def seasonal(variance=1.0, lengthscale=1.0, period=12.0, freeze_period=False, tied=True):
    """Seasonal kernel for monthly series: periodic plus smooth drift.

    tied=True shares one lengthscale and fixes the smooth part's amplitude
    at 1 (three parameters); tied=False keeps the periodic and smooth parts
    fully independent (four, plus the period).
    """
    if tied:
        return TiedSeasonal(variance, lengthscale, period, freeze_period)
    return Sum(
        Periodic(variance, lengthscale, period, freeze_period),
        SquaredExponential(variance, lengthscale),
    )


def kernel_from_config(cfg) -> Kernel:
    """Build a kernel tree from a nested config mapping.

    Accepted forms: {"type": "se"|"periodic"|"const"|"seasonal"} with named
    parameters, or {"type": "sum"|"product", "terms": [...]} recursively.
    """
    if isinstance(cfg, Kernel):
        return cfg
    if not isinstance(cfg, dict):
        raise ConfigError(f"kernel config must be a mapping, got {type(cfg).__name__}")
    kind = cfg.get("type")
    if kind == "se":
        return SquaredExponential(cfg.get("variance", 1.0), cfg.get("lengthscale", 1.0))
    if kind == "periodic":
        return Periodic(
            cfg.get("variance", 1.0),
            cfg.get("lengthscale", 1.0),
            cfg.get("period", 12.0),
            cfg.get("freeze_period", False),
        )
    if kind == "const":
        return Constant(cfg.get("value", 1.0))
    if kind == "seasonal":
        return seasonal(
            cfg.get("variance", 1.0),
            cfg.get("lengthscale", 1.0),
            cfg.get("period", 12.0),
            cfg.get("freeze_period", False),
            cfg.get("tied", True),
        )
    if kind in ("sum", "product"):
        terms = cfg.get("terms")
        if not terms:
            raise ConfigError(f"'{kind}' kernel needs a nonempty 'terms' list")
        children = [kernel_from_config(t) for t in terms]
        return Sum(*children) if kind == "sum" else Product(*children)
    raise ConfigError(f"unknown kernel type {kind!r}")
