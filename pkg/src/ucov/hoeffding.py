"""Projection decomposition of the subset-mean covariance kernel.

For the order-m kernel h(x_1..x_m) = (mean(x) - theta) (x) (same), define

    Phi_c(x_1..x_c) = E[ h(x_1..x_c, X_{c+1}..X_m) ],       Phi_0 = C_m,
    g_c(x_1..x_c)   = sum_{D subset of [c]} (-1)^(c-|D|) Phi_|D|(x_D).

The g_c are the canonical (completely degenerate) kernels: conditioning
g_c on any c-1 of its arguments gives zero, and the estimator deviation
splits exactly into component U-statistics,

    C_{m,n} - C_m = sum_{c=1..m} C(m,c) * U_n(g_c).

Conditional expectations come in two flavours: exact enumeration over
finite-support generators (used by the identity tests) and seeded Monte
Carlo otherwise.  All Phi terms inside one g_c evaluation share a single
draw pool, so their Monte Carlo noise is common and largely cancels in
the alternating sum.  Where a squared Monte Carlo quantity is needed
(variances of g_r, lag series), two evaluations with independent pools
are multiplied, which removes the noise-squared bias.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .datagen import (
    DependentGeneratorDescriptor,
    Sample,
    as_finite_support,
    draw_dependent_batch,
)
from .errors import (
    IndeterminateDiagnosticError,
    InvalidConfigError,
    UnsupportedOperationError,
)
from .estimator import _iid_draws, population_cm_exact
from .seeding import child_seed, chunk_ranges
from .spaces import Element, SpaceDescriptor
from .tensor import TensorRep

# block sizes for the paired (two-pool) Monte Carlo estimators
_OUTER_BLOCK = 512
_INNER_REPS = 512

DEGENERACY_TOL = 1e-3


@dataclass(frozen=True)
class KernelSpec:
    """Identity-kernel description: order m, centering theta, factor space."""

    space: SpaceDescriptor
    m: int
    theta: Optional[Element] = None

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise InvalidConfigError("kernel order m must be a positive integer")
        if self.theta is not None and self.theta.space != self.space:
            raise InvalidConfigError("theta lives in a different space than the kernel")

    @property
    def theta_coords(self) -> np.ndarray:
        return np.zeros(self.space.dim) if self.theta is None else self.theta.coords


def _fixed_coords(spec: KernelSpec, fixed) -> np.ndarray:
    """Normalize pinned arguments to a (c, d) array, c possibly zero."""
    if fixed is None:
        return np.zeros((0, spec.space.dim))
    if isinstance(fixed, Element):
        fixed = [fixed]
    if isinstance(fixed, (list, tuple)) and all(isinstance(x, Element) for x in fixed):
        for x in fixed:
            if x.space != spec.space:
                raise InvalidConfigError("fixed argument lives in a different space")
        coords = (np.array([x.coords for x in fixed])
                  if fixed else np.zeros((0, spec.space.dim)))
    else:
        coords = np.atleast_2d(np.asarray(fixed, dtype=float))
    if coords.shape[0] > spec.m:
        raise InvalidConfigError(
            f"{coords.shape[0]} fixed arguments exceed kernel order m={spec.m}")
    if coords.shape[1:] != (spec.space.dim,):
        raise InvalidConfigError("fixed arguments do not match the kernel space dim")
    return coords


def kernel_eval(spec: KernelSpec, block) -> TensorRep:
    """h itself: outer square of the centered mean of m points."""
    coords = _fixed_coords(spec, block)
    if coords.shape[0] != spec.m:
        raise InvalidConfigError(f"kernel takes exactly m={spec.m} arguments")
    v = coords.mean(axis=0) - spec.theta_coords
    return TensorRep(spec.space, np.outer(v, v))


# ---------------------------------------------------------------- exact path

def _finite_atoms(gen):
    fs = as_finite_support(gen)
    if fs is None:
        raise UnsupportedOperationError(
            "exact conditional expectations need a finite-support generator")
    return np.asarray(fs.atoms, dtype=float), np.asarray(fs.probs)


def _tuple_sums(atoms: np.ndarray, probs: np.ndarray, t: int):
    """Sums and weights of all ordered t-tuples of atoms (t = 0 included)."""
    d = atoms.shape[1]
    sums = np.zeros((1, d))
    w = np.ones(1)
    for _ in range(t):
        sums = (sums[:, None, :] + atoms[None, :, :]).reshape(-1, d)
        w = (w[:, None] * probs[None, :]).reshape(-1)
    return sums, w


def phi_c_exact(spec: KernelSpec, gen, fixed) -> TensorRep:
    """Phi_c by weighted enumeration over a finite-support law."""
    atoms, probs = _finite_atoms(gen)
    coords = _fixed_coords(spec, fixed)
    sums, w = _tuple_sums(atoms, probs, spec.m - coords.shape[0])
    v = (coords.sum(axis=0) + sums) / spec.m - spec.theta_coords
    grid = np.einsum("t,ti,tj->ij", w, v, v)
    return TensorRep(spec.space, grid)


def g_c_exact(spec: KernelSpec, gen, fixed) -> TensorRep:
    """Canonical kernel g_c by inclusion-exclusion over exact Phi terms."""
    coords = _fixed_coords(spec, fixed)
    c = coords.shape[0]
    d = spec.space.dim
    grid = np.zeros((d, d))
    for dd in range(c + 1):
        sign = (-1.0) ** (c - dd)
        for subset in itertools.combinations(range(c), dd):
            grid += sign * phi_c_exact(spec, gen, coords[list(subset)]).grid
    return TensorRep(spec.space, grid)


# ----------------------------------------------------------- Monte Carlo path

def _draw_pool(spec: KernelSpec, gen, reps: int, seed_keys: Tuple[int, ...]) -> np.ndarray:
    """(reps, m, d) shared draw pool; Phi_c uses the first m-c columns."""
    d = spec.space.dim
    flat = _iid_draws(gen, reps * spec.m, child_seed(*seed_keys))
    return flat.reshape(reps, spec.m, d)


def _phi_pool_grid(spec: KernelSpec, fixed_sum: np.ndarray, free: int,
                   pool: np.ndarray) -> np.ndarray:
    """Mean kernel grid over pool rows with `free` draw slots filled."""
    v = (fixed_sum + pool[:, :free, :].sum(axis=1)) / spec.m - spec.theta_coords
    return np.einsum("ri,rj->ij", v, v) / pool.shape[0]


def phi_c(spec: KernelSpec, gen, fixed, reps: int, seed: int) -> TensorRep:
    """Monte Carlo Phi_c; exact (draw-free) when all m arguments are pinned."""
    coords = _fixed_coords(spec, fixed)
    c = coords.shape[0]
    if c == spec.m:
        return kernel_eval(spec, coords)
    if reps < 1:
        raise InvalidConfigError("phi_c needs at least one replication")
    pool = _draw_pool(spec, gen, reps, (seed,))
    return TensorRep(spec.space,
                     _phi_pool_grid(spec, coords.sum(axis=0), spec.m - c, pool))


def g_c(spec: KernelSpec, gen, fixed, reps: int, seed: int) -> TensorRep:
    """Monte Carlo g_c; all Phi terms share one pool keyed by seed."""
    coords = _fixed_coords(spec, fixed)
    c = coords.shape[0]
    if c == 0:
        return phi_c(spec, gen, None, reps, seed)
    if reps < 1:
        raise InvalidConfigError("g_c needs at least one replication")
    pool = _draw_pool(spec, gen, reps, (seed,))
    d = spec.space.dim
    grid = np.zeros((d, d))
    for dd in range(c + 1):
        sign = (-1.0) ** (c - dd)
        for subset in itertools.combinations(range(c), dd):
            fixed_sum = coords[list(subset)].sum(axis=0)
            grid += sign * _phi_pool_grid(spec, fixed_sum, spec.m - dd, pool)
    return TensorRep(spec.space, grid)


@dataclass
class ProjectionEstimate:
    """Reusable evaluator handle for Phi_c or g_c at a fixed MC protocol.

    After each evaluate() call, `se` holds the per-entry standard error of
    the top-order Phi_c average (the dominant noise source; exact zero when
    c = m, where no draws are involved).
    """

    spec: KernelSpec
    gen: object
    c: int
    reps: int
    seed: int
    kind: str = "phi"  # "phi" or "g"
    se: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("phi", "g"):
            raise InvalidConfigError("projection kind must be 'phi' or 'g'")
        if not 0 <= self.c <= self.spec.m:
            raise InvalidConfigError(f"projection order c={self.c} outside 0..m")

    def evaluate(self, fixed) -> TensorRep:
        coords = _fixed_coords(self.spec, fixed)
        if coords.shape[0] != self.c:
            raise InvalidConfigError(f"expected exactly c={self.c} fixed arguments")
        fn = phi_c if self.kind == "phi" else g_c
        value = fn(self.spec, self.gen, coords, self.reps, self.seed)
        self.se = _phi_se(self.spec, self.gen, coords, self.reps, self.seed)
        return value


def _phi_se(spec: KernelSpec, gen, coords: np.ndarray, reps: int, seed: int) -> np.ndarray:
    """Per-entry MC standard error of the plain Phi_c average (c = m -> 0)."""
    c = coords.shape[0]
    d = spec.space.dim
    if c == spec.m:
        return np.zeros((d, d))
    pool = _draw_pool(spec, gen, reps, (seed,))
    v = (coords.sum(axis=0) + pool[:, :spec.m - c, :].sum(axis=1)) / spec.m - spec.theta_coords
    grids = np.einsum("ri,rj->rij", v, v)
    return grids.std(axis=0, ddof=1) / math.sqrt(reps)


# ------------------------------------------------------ component U-statistics

def component_ustat(sample: Sample, spec: KernelSpec, c: int, gen,
                    reps: int, seed: int,
                    population_cm: Optional[TensorRep] = None) -> TensorRep:
    """U-statistic of order c with the canonical kernel g_c over the sample.

    Grouping the inclusion-exclusion by which sample subset feeds each Phi
    term turns the average of g_c over C(n,c) subsets into

        sum_{t=0..c} (-1)^(c-t) C(n-t, c-t) C(n,t) mean_{|U|=t} Phi_t(X_U) / C(n,c),

    evaluated on one shared draw pool.  Generators with finitely many atoms
    skip the pool and enumerate the conditional expectations exactly.
    c = 0 returns the C_m estimate (population_cm if supplied, exact
    enumeration when available, the Monte Carlo oracle otherwise).
    """
    if not 0 <= c <= spec.m:
        raise InvalidConfigError(f"component order c={c} outside 0..m={spec.m}")
    n = sample.n
    if c > n:
        raise InvalidConfigError(f"component order c={c} exceeds sample size {n}")
    if sample.space != spec.space:
        raise InvalidConfigError("sample and kernel spaces differ")
    if c == 0:
        return _cm_estimate(spec, gen, reps, seed, population_cm)
    if as_finite_support(gen) is not None:
        return component_ustat_exact(sample, spec, c, gen)
    d = spec.space.dim
    y = sample.coords
    pool = _draw_pool(spec, gen, reps, (seed,))
    pool_sums = np.concatenate(
        [np.zeros((reps, 1, d)), np.cumsum(pool, axis=1)], axis=1)  # (reps, m+1, d)
    grid = np.zeros((d, d))
    for t in range(c + 1):
        coeff = ((-1.0) ** (c - t)) * math.comb(n - t, c - t) / math.comb(n, c)
        subset_sums = (np.array([y[list(u)].sum(axis=0)
                                 for u in itertools.combinations(range(n), t)])
                       if t else np.zeros((1, d)))
        ps = pool_sums[:, spec.m - t, :]  # (reps, d): sum of the first m-t slots
        v = (subset_sums[None, :, :] + ps[:, None, :]) / spec.m - spec.theta_coords
        term = np.einsum("rci,rcj->ij", v, v) / (reps * subset_sums.shape[0])
        grid += coeff * subset_sums.shape[0] * term
    return TensorRep(spec.space, grid)


def component_ustat_exact(sample: Sample, spec: KernelSpec, c: int, gen) -> TensorRep:
    """Exact component U-statistic for finite-support generators."""
    if not 0 <= c <= spec.m:
        raise InvalidConfigError(f"component order c={c} outside 0..m={spec.m}")
    if c == 0:
        return phi_c_exact(spec, gen, None)
    n = sample.n
    if c > n:
        raise InvalidConfigError(f"component order c={c} exceeds sample size {n}")
    d = spec.space.dim
    grid = np.zeros((d, d))
    for subset in itertools.combinations(range(n), c):
        grid += g_c_exact(spec, gen, sample.coords[list(subset)]).grid
    return TensorRep(spec.space, grid / math.comb(n, c))


def _cm_estimate(spec: KernelSpec, gen, reps: int, seed: int,
                 population_cm: Optional[TensorRep]) -> TensorRep:
    if population_cm is not None:
        return population_cm
    if as_finite_support(gen) is not None:
        return phi_c_exact(spec, gen, None)
    from .estimator import population_cm_oracle
    return population_cm_oracle(gen, spec.m, reps, seed, theta=spec.theta).value


# -------------------------------------------------- paired variance machinery

def _g1_grids(spec: KernelSpec, gen, points: np.ndarray,
              seed_keys: Tuple[int, ...], inner: int) -> np.ndarray:
    """Unbiased estimates of g1~(x) = Phi_1(x) - C_m at each point.

    points: (B, d) -> (B, d, d).  For m = 1 the evaluation is exact and the
    seed keys are ignored; otherwise one draw pool keyed by seed_keys fills
    the m-1 free kernel slots.  C_m enters through its exact moment formula.
    Callers that need a squared quantity must multiply two evaluations with
    distinct seed keys so the inner noise cannot bias the product.
    """
    b, d = points.shape
    m = spec.m
    theta = spec.theta_coords
    cm = population_cm_exact(gen, m, theta=spec.theta).grid
    if m == 1:
        v = points - theta
        return np.einsum("bi,bj->bij", v, v) - cm
    pool = _iid_draws(gen, b * inner * (m - 1), child_seed(*seed_keys))
    pool = pool.reshape(b, inner, m - 1, d)
    v = (points[:, None, :] + pool.sum(axis=2)) / m - theta
    return np.einsum("bri,brj->bij", v, v) / inner - cm


def hajek_variance(spec: KernelSpec, gen, u, v, reps: int, seed: int,
                   inner: int = _INNER_REPS) -> float:
    """Directional variance of the first canonical projection.

    Estimates E[ s(Z)^2 ] with s(z) = <u, g1~(z) v> and g1~ = Phi_1 - C_m,
    the variance that scales the sqrt(n)/m-normalized estimator deviation
    in the direction u (x) v.  For m >= 2 each squared value is formed as
    the product of two independent-pool estimates (unbiased); the final
    average is clipped at zero to respect nonnegativity.
    """
    if reps < 2:
        raise InvalidConfigError("hajek_variance needs at least two replications")
    uc = np.atleast_1d(np.asarray(u.coords if isinstance(u, Element) else u, dtype=float))
    vc = np.atleast_1d(np.asarray(v.coords if isinstance(v, Element) else v, dtype=float))
    total = 0.0
    for k, start, stop in chunk_ranges(reps, _OUTER_BLOCK):
        b = stop - start
        z = _iid_draws(gen, b, child_seed(seed, k, 0))
        g1 = _g1_grids(spec, gen, z, (seed, k, 1), inner)
        g2 = _g1_grids(spec, gen, z, (seed, k, 2), inner)
        s1 = np.einsum("i,bij,j->b", uc, g1, vc)
        s2 = np.einsum("i,bij,j->b", uc, g2, vc)
        total += float(np.sum(s1 * s2))
    return max(0.0, total / reps)


def degeneracy_profile(spec: KernelSpec, gen, reps: int, seed: int,
                       tol: float = DEGENERACY_TOL) -> dict:
    """Variance of every projection g_1..g_m plus the derived order.

    The order is r-1 for the smallest r whose variance exceeds tol, and m
    when every projection vanishes.  Finite-support generators are
    enumerated exactly.  On the Monte Carlo path each variance is the mean
    Frobenius product of two independent-pool g_r evaluations; while the
    order is still undecided, a value inside [tol/3, tol] is inconclusive
    and raises instead of guessing.
    """
    fs = as_finite_support(gen)
    variances = []
    order = spec.m
    decided = False
    for r in range(1, spec.m + 1):
        if fs is not None:
            var_r = _g_r_variance_exact(spec, fs, r)
        else:
            var_r = _g_r_variance_mc(spec, gen, r, reps, seed)
            if not decided and tol / 3.0 <= var_r <= tol:
                raise IndeterminateDiagnosticError(
                    f"variance of g_{r} = {var_r:.3g} falls in the indeterminate band "
                    f"[{tol / 3.0:.3g}, {tol:.3g}]; raise reps or adjust tol")
        variances.append(var_r)
        if not decided and var_r > tol:
            order = r - 1
            decided = True
    return {"order": order, "variances": variances, "tol": tol, "reps": reps}


def degeneracy_order(spec: KernelSpec, gen, reps: int, seed: int,
                     tol: float = DEGENERACY_TOL) -> int:
    """Largest r such that g_1..g_r all vanish; see degeneracy_profile."""
    return degeneracy_profile(spec, gen, reps, seed, tol=tol)["order"]


def _g_r_variance_exact(spec: KernelSpec, fs, r: int) -> float:
    atoms, probs = _finite_atoms(fs)
    total = 0.0
    for combo in itertools.product(range(len(probs)), repeat=r):
        w = float(np.prod(probs[list(combo)]))
        grid = g_c_exact(spec, fs, atoms[list(combo)]).grid
        total += w * float(np.sum(grid * grid))
    return total


def _g_r_variance_mc(spec: KernelSpec, gen, r: int, reps: int, seed: int) -> float:
    """E ||g_r||_F^2 via products of two independent-pool evaluations."""
    m = spec.m
    d = spec.space.dim
    theta = spec.theta_coords
    total = 0.0
    for k, start, stop in chunk_ranges(reps, _OUTER_BLOCK):
        b = stop - start
        z = _iid_draws(gen, b * r, child_seed(seed, r, k, 0)).reshape(b, r, d)
        grids = []
        for which in (1, 2):
            pool = _iid_draws(gen, b * _INNER_REPS * m,
                              child_seed(seed, r, k, which)).reshape(b, _INNER_REPS, m, d)
            g = np.zeros((b, d, d))
            for t in range(r + 1):
                sign = (-1.0) ** (r - t)
                for subset in itertools.combinations(range(r), t):
                    fixed_sum = z[:, list(subset), :].sum(axis=1)  # (b, d)
                    vv = (fixed_sum[:, None, :] + pool[:, :, :m - t, :].sum(axis=2)) / m - theta
                    g += sign * np.einsum("bri,brj->bij", vv, vv) / _INNER_REPS
            grids.append(g)
        total += float(np.sum(grids[0] * grids[1]))
    return total / reps


# ----------------------------------------------------------- dependent series

def _lag_products(spec: KernelSpec, dep: DependentGeneratorDescriptor,
                  max_lag: int, reps: int, seed: int, uv=None) -> np.ndarray:
    """E[ <g1~(X_1), g1~(X_{1+k})> ] for k = 0..max_lag from MA trajectories.

    uv=None takes the Frobenius pairing; uv=(u, v) takes the product of the
    directional values.  The two factors of every product use independent
    draw pools, so inner-MC noise does not bias the lag-0 term.
    """
    if max_lag < 0:
        raise InvalidConfigError("max_lag must be nonnegative")
    if reps < 2:
        raise InvalidConfigError("the lag series needs at least two replications")
    d = spec.space.dim
    length = max_lag + 1
    sums = np.zeros(length)
    if uv is not None:
        uc = np.atleast_1d(np.asarray(uv[0].coords if isinstance(uv[0], Element) else uv[0],
                                      dtype=float))
        vc = np.atleast_1d(np.asarray(uv[1].coords if isinstance(uv[1], Element) else uv[1],
                                      dtype=float))
    for k, start, stop in chunk_ranges(reps, _OUTER_BLOCK):
        b = stop - start
        traj = draw_dependent_batch(dep, b, length, child_seed(seed, k, 0))
        left = _g1_grids(spec, dep, traj[:, 0, :], (seed, k, 0x51), _INNER_REPS)
        flat = traj.reshape(b * length, d)
        right = _g1_grids(spec, dep, flat, (seed, k, 0x52), _INNER_REPS)
        right = right.reshape(b, length, d, d)
        if uv is None:
            sums += np.einsum("bij,bkij->k", left, right)
        else:
            sl = np.einsum("i,bij,j->b", uc, left, vc)
            sr = np.einsum("i,bkij,j->bk", uc, right, vc)
            sums += sl @ sr
    return sums / reps


def sigma_inf_sq(spec: KernelSpec, dep: DependentGeneratorDescriptor,
                 max_lag: int, reps: int, seed: int) -> float:
    """Truncated long-run variance series of the first projection.

    sigma_inf^2 ~= E||g1~(X_1)||^2 + 2 sum_{k=1..max_lag} E<g1~(X_1), g1~(X_{1+k})>
    over the stationary MA law.
    """
    lags = _lag_products(spec, dep, max_lag, reps, seed, uv=None)
    return float(lags[0] + 2.0 * lags[1:].sum())


def directional_lag_variance(spec: KernelSpec, dep: DependentGeneratorDescriptor,
                             u, v, max_lag: int, reps: int, seed: int) -> float:
    """Directional version of sigma_inf_sq along the dual pair (u, v)."""
    lags = _lag_products(spec, dep, max_lag, reps, seed, uv=(u, v))
    return float(lags[0] + 2.0 * lags[1:].sum())
