"""Subset-mean covariance operator estimators.

For a sample X_1..X_n and an order m <= n, the estimator averages the
rank-one tensor ((X_{i_1}+...+X_{i_m})/m - theta) (x) (same) over all
C(n, m) index subsets.  Two algorithms are provided:

* enumerate    -- literal average over subsets in lexicographic order,
                  accumulated in a single pass; works for any kernel;
* closed_form  -- O(n d^2) identity for the identity kernel.  Counting how
                  often each index pair (i, j) appears across subsets gives

                      C(n,m) m^2 C = C(n-2,m-2) (S (x) S - sum_i Y_i (x) Y_i)
                                     + C(n-1,m-1) sum_i Y_i (x) Y_i

                  with Y_i = X_i - theta and S = sum_i Y_i (the m = 1 case
                  reads C(n-2,-1) = 0).

A 'sign' kernel variant replaces the centered subset mean v by v / ||v||
(0 at the origin) before the outer product; it has no closed form here and
must be enumerated.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .datagen import (
    DependentGeneratorDescriptor,
    Sample,
    draw_iid,
    draw_marginal,
    generator_cov,
    generator_mean,
)
from .errors import InvalidConfigError, UnsupportedOperationError
from .seeding import CHUNK, child_seed, chunk_ranges
from .spaces import Element, array_norm
from .tensor import TensorRep

KERNELS = ("identity", "sign")
ALGORITHMS = ("auto", "enumerate", "closed_form")

# subsets per accumulation block on the enumerate path; bounds memory only
_ENUM_BLOCK = 1 << 16


@dataclass(frozen=True)
class EstimatorConfig:
    m: int
    theta: Optional[Element] = None  # None means the origin
    kernel: str = "identity"
    algorithm: str = "auto"

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise InvalidConfigError(f"order m must be a positive integer, got {self.m!r}")
        if self.kernel not in KERNELS:
            raise InvalidConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfigError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.algorithm == "closed_form" and self.kernel == "sign":
            raise UnsupportedOperationError(
                "the closed form sums raw index-pair outer products and cannot "
                "absorb the sign kernel's per-subset normalization; use enumerate")


def _theta_coords(sample: Sample, theta: Optional[Element]) -> np.ndarray:
    if theta is None:
        return np.zeros(sample.space.dim)
    if theta.space != sample.space:
        raise InvalidConfigError("theta lives in a different space than the sample")
    return theta.coords


def _enumerate_grid(y: np.ndarray, m: int, kernel: str, norm_kind: str) -> np.ndarray:
    n, d = y.shape
    grid = np.zeros((d, d))
    total = 0
    combos = itertools.combinations(range(n), m)
    while True:
        block = list(itertools.islice(combos, _ENUM_BLOCK))
        if not block:
            break
        idx = np.array(block, dtype=np.intp)
        v = y[idx].sum(axis=1) / m
        if kernel == "sign":
            r = array_norm(v, norm_kind, axis=1)
            r[r == 0.0] = 1.0
            v = v / r[:, None]
        grid += np.einsum("ci,cj->ij", v, v)
        total += idx.shape[0]
    return grid / total


def _closed_form_grid(y: np.ndarray, m: int) -> np.ndarray:
    n = y.shape[0]
    s = y.sum(axis=0)
    diag_part = y.T @ y
    r1 = m / n
    r2 = m * (m - 1) / (n * (n - 1)) if m > 1 else 0.0
    return (r2 * np.outer(s, s) + (r1 - r2) * diag_part) / (m * m)


def estimate(sample: Sample, cfg: EstimatorConfig) -> TensorRep:
    """Order-m subset-mean covariance estimate of a sample."""
    n = sample.n
    if cfg.m > n:
        raise InvalidConfigError(f"order m={cfg.m} exceeds sample size n={n}")
    y = sample.coords - _theta_coords(sample, cfg.theta)
    algorithm = cfg.algorithm
    if algorithm == "auto":
        algorithm = "closed_form" if cfg.kernel == "identity" else "enumerate"
    if algorithm == "closed_form":
        if cfg.kernel != "identity":
            raise UnsupportedOperationError("closed_form is only valid for the identity kernel")
        grid = _closed_form_grid(y, cfg.m)
    else:
        grid = _enumerate_grid(y, cfg.m, cfg.kernel, sample.space.norm_kind)
    return TensorRep(sample.space, grid)


def population_cm_analytic(variance: float, m: int) -> float:
    """Population operator for a scalar centered i.i.d. law: variance / m."""
    if variance < 0:
        raise InvalidConfigError("variance must be nonnegative")
    if not isinstance(m, int) or m < 1:
        raise InvalidConfigError("order m must be a positive integer")
    return variance / m


def population_cm_exact(gen, m: int, theta: Optional[Element] = None) -> TensorRep:
    """Population operator from the generator's exact moments.

    E[(mean of m draws - theta) (x) (same)] = Cov(X)/m + (mu-theta)(x)(mu-theta);
    MA descriptors contribute their stationary marginal moments.
    """
    if not isinstance(m, int) or m < 1:
        raise InvalidConfigError("order m must be a positive integer")
    space = gen.space
    mu = generator_mean(gen)
    t = np.zeros(space.dim) if theta is None else theta.coords
    grid = generator_cov(gen) / m + np.outer(mu - t, mu - t)
    return TensorRep(space, grid)


class OracleEstimate(NamedTuple):
    value: TensorRep
    se: np.ndarray  # per-entry Monte Carlo standard error


def _iid_draws(gen, count: int, seed: int) -> np.ndarray:
    if isinstance(gen, DependentGeneratorDescriptor):
        return draw_marginal(gen, count, seed).coords
    return draw_iid(gen, count, seed).coords


def population_cm_oracle(gen, m: int, reps: int, seed: int,
                         theta: Optional[Element] = None) -> OracleEstimate:
    """Monte Carlo population operator: mean over reps independent m-blocks.

    Replications are drawn in fixed-size chunks keyed (seed, chunk index),
    so the result depends only on (gen, m, reps, seed).
    """
    if not isinstance(m, int) or m < 1:
        raise InvalidConfigError("order m must be a positive integer")
    if reps < 2:
        raise InvalidConfigError("the oracle needs at least two replications")
    space = gen.space
    d = space.dim
    t = np.zeros(d) if theta is None else theta.coords
    acc = np.zeros((d, d))
    acc2 = np.zeros((d, d))
    for k, start, stop in chunk_ranges(reps, CHUNK):
        b = stop - start
        block = _iid_draws(gen, b * m, child_seed(seed, k)).reshape(b, m, d)
        v = block.mean(axis=1) - t
        g = np.einsum("ri,rj->rij", v, v)
        acc += g.sum(axis=0)
        acc2 += (g * g).sum(axis=0)
    mean = acc / reps
    var = (acc2 - reps * mean * mean) / (reps - 1)
    se = np.sqrt(np.maximum(var, 0.0) / reps)
    return OracleEstimate(TensorRep(space, mean), se)
