"""Dense SPD linear algebra used by every GP computation.

All solves go through a Cholesky factor; no explicit inverse is ever
formed. Factorization retries with escalating diagonal jitter, since
kernel matrices of near-duplicate inputs are routinely semidefinite
to float precision.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class JitterPolicy:
    """Jitter ladder: initial_scale * mean(diag) growing by ``growth`` per step.

    A plain factorization (zero jitter) is always attempted first;
    ``max_steps`` counts the jittered retries after that.
    """

    initial_scale: float = 1e-10
    growth: float = 10.0
    max_steps: int = 6


DEFAULT_JITTER = JitterPolicy()


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular L with L L^T = K + jitter*I for the factorized K."""

    lower: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.lower.shape[0]


def _check_square_symmetric(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = np.abs(m).max() if m.size else 0.0
    if scale > 0 and np.abs(m - m.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    return m


def cholesky(m, policy: JitterPolicy = DEFAULT_JITTER) -> CholFactor:
    """Factor an SPD matrix, escalating jitter until it succeeds.

    Returns the factor for the smallest jitter in the ladder that works,
    recording the jitter used. Raises NotPositiveDefinite once the
    ladder is exhausted.
    """
    m = _check_square_symmetric(m)
    base = float(np.mean(np.diag(m)))
    if base <= 0.0:
        base = 1.0

    jitters = [0.0]
    jitters += [policy.initial_scale * base * policy.growth**k for k in range(policy.max_steps)]
    for jitter in jitters:
        try:
            lower = np.linalg.cholesky(m if jitter == 0.0 else m + jitter * np.eye(m.shape[0]))
        except np.linalg.LinAlgError:
            continue
        return CholFactor(lower=lower, jitter=jitter)
    raise NotPositiveDefinite(
        f"cholesky failed at maximum jitter {jitters[-1]:.3e} (n={m.shape[0]})"
    )


def solve_chol(factor: CholFactor, b):
    """Solve (L L^T) x = b via two triangular solves. ``b`` may be a matrix."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != factor.n:
        raise DimensionMismatch(f"rhs has length {b.shape[0]}, factor is {factor.n}x{factor.n}")
    return scipy.linalg.cho_solve((factor.lower, True), b, check_finite=False)


def solve_lower(factor: CholFactor, b):
    """Solve L v = b (one triangular solve), used for predictive variances."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != factor.n:
        raise DimensionMismatch(f"rhs has length {b.shape[0]}, factor is {factor.n}x{factor.n}")
    return scipy.linalg.solve_triangular(factor.lower, b, lower=True, check_finite=False)


def logdet(factor: CholFactor) -> float:
    """log det of the factorized matrix: 2 * sum(log diag(L))."""
    return 2.0 * float(np.sum(np.log(np.diag(factor.lower))))


def inv_from_chol(factor: CholFactor):
    """Full symmetric inverse of the factorized matrix.

    Only place an explicit inverse is allowed: the likelihood gradient
    needs all of K^-1 for its trace term, and LAPACK's dpotri from the
    existing factor is one third the cost of a fresh solve against I.
    """
    c, info = scipy.linalg.lapack.dpotri(factor.lower, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"dpotri failed with info={info}")
    return np.tril(c) + np.tril(c, -1).T
