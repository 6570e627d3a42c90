"""Numpy implementation of the pairwise kernel primitives.

This is the fallback used when the compiled extension is unavailable.
Both backends expose the same four functions and must agree to float
roundoff; tests/test_backends.py checks the parity.
"""

import numpy as np

NAME = "pure"


def _as_2d(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def pairwise_sqdist(xa, xb):
    """Squared Euclidean distance between all rows of ``xa`` and ``xb``.

    Accumulates one coordinate at a time, which keeps the computation
    exact for near-duplicate rows (the BLAS ``|a|^2+|b|^2-2ab`` trick
    cancels catastrophically there).
    """
    xa, xb = _as_2d(xa), _as_2d(xb)
    if xa.shape[1] != xb.shape[1]:
        raise ValueError(f"dimension mismatch: {xa.shape[1]} vs {xb.shape[1]}")
    out = np.zeros((xa.shape[0], xb.shape[0]))
    for k in range(xa.shape[1]):
        diff = xa[:, k, None] - xb[None, :, k]
        out += diff * diff
    return out


def pairwise_dist(xa, xb):
    """Euclidean distance between all rows of ``xa`` and ``xb``."""
    return np.sqrt(pairwise_sqdist(xa, xb))


def se_gram(xa, xb, variance, lengthscale):
    """variance * exp(-|a-b|^2 / (2 lengthscale^2)), all pairs."""
    d2 = pairwise_sqdist(xa, xb)
    return variance * np.exp(d2 * (-0.5 / (lengthscale * lengthscale)))


def periodic_gram(xa, xb, variance, lengthscale, period):
    """variance * exp(-2 sin^2(pi |a-b| / period) / lengthscale^2), all pairs."""
    r = pairwise_dist(xa, xb)
    s = np.sin(r * (np.pi / period))
    return variance * np.exp((s * s) * (-2.0 / (lengthscale * lengthscale)))
