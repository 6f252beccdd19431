"""Monte Carlo experiment harness for the subset-mean covariance estimator.

Each experiment is a pure function of an McPlan: replication l of a cell
(n, m) always draws from the stream keyed (master_seed, n, m, l), blocks
of replications are assembled by index, and report files carry no clocks,
so re-runs are byte-identical for any worker count.

Experiments refuse to run (GuardRefusalError) when their premise fails
for the plan: the normal-limit check requires a non-degenerate first
projection, the degenerate-scaling check requires the opposite, and the
dependent-sequence check requires a nonvanishing long-run variance.
The two degeneracy-driven guards consult the same diagnostic, so exactly
one of clt_check / degenerate_check accepts any conclusive plan.
"""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import __version__
from .datagen import (
    DependentGeneratorDescriptor,
    GeneratorDescriptor,
    descriptor_hash,
    draw_dependent,
    draw_iid,
    student_t,
)
from .errors import GuardRefusalError, InvalidConfigError
from .estimator import EstimatorConfig, estimate, population_cm_exact
from .hoeffding import (
    KernelSpec,
    degeneracy_order,
    directional_lag_variance,
    hajek_variance,
)
from .reporting import ExperimentReport, grid_markdown
from .seeding import child_seed, fanout
from .spaces import Element
from .tensor import TensorRep, hilbert_norm, injective_norm, projective_norm

REPORT_NORMS = ("hilbert", "injective", "projective")


@dataclass(frozen=True)
class McPlan:
    """Replication plan shared by all experiments."""

    gen: object  # GeneratorDescriptor or DependentGeneratorDescriptor
    L: int
    n_grid: Tuple[int, ...]
    m_grid: Tuple[int, ...]
    master_seed: int
    kernel: str = "identity"
    algorithm: str = "auto"
    norm: str = "hilbert"
    workers: int = 1
    guard_reps: int = 4096
    oracle_reps: int = 200_000
    max_lag: int = 8
    degeneracy_tol: float = 1e-3
    sigma_tol: float = 1e-3

    def __post_init__(self):
        if not isinstance(self.gen, (GeneratorDescriptor, DependentGeneratorDescriptor)):
            raise InvalidConfigError("plan.gen must be a generator descriptor")
        if self.L < 1:
            raise InvalidConfigError("plan needs at least one replication")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise InvalidConfigError("n_grid must list positive sample sizes")
        if not self.m_grid or any(m < 1 for m in self.m_grid):
            raise InvalidConfigError("m_grid must list positive orders")
        if any(m > min(self.n_grid) for m in self.m_grid):
            raise InvalidConfigError("every order m must fit the smallest n")
        if self.norm not in REPORT_NORMS:
            raise InvalidConfigError(f"report norm must be one of {REPORT_NORMS}")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "m_grid", tuple(int(m) for m in self.m_grid))


def _norm_value(t: TensorRep, name: str):
    if name == "hilbert":
        return hilbert_norm(t), "exact"
    if name == "injective":
        res = injective_norm(t)
        return res.value, res.method
    res = projective_norm(t)
    return res.value, res.method


# ------------------------------------------------------- replication engine

@dataclass(frozen=True)
class _RepTask:
    """Picklable description of one (n, m) replication cell."""

    gen: object
    dependent: bool
    n: int
    m: int
    master_seed: int
    kernel: str
    algorithm: str
    cm_grid: np.ndarray
    mode: str  # "norm" or "dirs"
    norm: str = "hilbert"
    directions: Optional[np.ndarray] = None  # (K, 2, d)
    scaled: bool = False  # multiply directional values by sqrt(n)/m


def _rep_block(task: _RepTask, start: int, stop: int) -> np.ndarray:
    cfg = EstimatorConfig(m=task.m, kernel=task.kernel, algorithm=task.algorithm)
    width = 1 if task.mode == "norm" else task.directions.shape[0]
    out = np.empty((stop - start, width))
    scale = math.sqrt(task.n) / task.m if task.scaled else 1.0
    for l in range(start, stop):
        seed = child_seed(task.master_seed, task.n, task.m, l)
        if task.dependent:
            sample = draw_dependent(task.gen, task.n, seed)
        else:
            sample = draw_iid(task.gen, task.n, seed)
        dev = estimate(sample, cfg).grid - task.cm_grid
        if task.mode == "norm":
            out[l - start, 0], _ = _norm_value(TensorRep(sample.space, dev), task.norm)
        else:
            for j, (u, v) in enumerate(task.directions):
                out[l - start, j] = scale * float(u @ dev @ v)
    return out


def _replicates(plan: McPlan, n: int, m: int, mode: str,
                directions: Optional[np.ndarray] = None, scaled: bool = False) -> np.ndarray:
    dependent = isinstance(plan.gen, DependentGeneratorDescriptor)
    cm = population_cm_exact(plan.gen, m).grid
    task = _RepTask(plan.gen, dependent, n, m, plan.master_seed, plan.kernel,
                    plan.algorithm, cm, mode, plan.norm, directions, scaled)
    return fanout(plan.L, functools.partial(_rep_block, task), plan.workers)


def _directions_array(plan: McPlan, directions) -> np.ndarray:
    d = plan.gen.space.dim
    if directions is None:
        e1 = np.zeros(d)
        e1[0] = 1.0
        directions = [(e1, e1)]
    arr = []
    for u, v in directions:
        uc = u.coords if isinstance(u, Element) else np.atleast_1d(np.asarray(u, dtype=float))
        vc = v.coords if isinstance(v, Element) else np.atleast_1d(np.asarray(v, dtype=float))
        if uc.shape != (d,) or vc.shape != (d,):
            raise InvalidConfigError("direction vectors must match the space dim")
        arr.append((uc, vc))
    return np.array(arr)


def _base_metadata(plan: McPlan) -> dict:
    return {
        "software_version": __version__,
        "master_seed": plan.master_seed,
        "generator": descriptor_hash(plan.gen),
        "workers": plan.workers,
    }


def _kernel_spec(plan: McPlan, m: int) -> KernelSpec:
    return KernelSpec(plan.gen.space, m)


def _guard_order(plan: McPlan, m: int) -> int:
    return degeneracy_order(_kernel_spec(plan, m), plan.gen, plan.guard_reps,
                            child_seed(plan.master_seed, 0xD16, m),
                            tol=plan.degeneracy_tol)


# ------------------------------------------------------------- experiments

def consistency_curve(plan: McPlan) -> ExperimentReport:
    """Mean norm deviation per sample size, with a log-log decay slope per m."""
    t0 = time.perf_counter()
    gh = descriptor_hash(plan.gen)
    d = plan.gen.space.dim
    _, method = _norm_value(TensorRep(plan.gen.space, np.zeros((d, d))), plan.norm)
    rows = []
    slopes = {}
    for m in plan.m_grid:
        means = []
        for n in plan.n_grid:
            vals = _replicates(plan, n, m, "norm")[:, 0]
            means.append(float(vals.mean()))
        if len(plan.n_grid) >= 2 and min(means) > 0:
            slope = float(np.polyfit(np.log(plan.n_grid), np.log(means), 1)[0])
        else:
            slope = float("nan")
        slopes[m] = slope
        for n, mean_dev in zip(plan.n_grid, means):
            rows.append((n, m, plan.L, plan.master_seed, gh, plan.norm, method,
                         mean_dev, slope))
    meta = _base_metadata(plan)
    meta.update(slopes={m: s for m, s in slopes.items()},
                norm_method=method, wall_time_s=time.perf_counter() - t0)
    return ExperimentReport(
        "consistency",
        ["n", "m", "L", "seed", "gen_hash", "norm", "norm_method",
         "mean_norm_dev", "slope_loglog"],
        rows, meta)


def clt_check(plan: McPlan, directions=None) -> ExperimentReport:
    """Normal-limit check for sqrt(n)/m-scaled deviations in dual directions.

    Refuses when the first projection is degenerate for some plan order.
    For every (n, m, direction): replicate variance, its first-projection
    oracle, a KS test against N(0, oracle), and shape diagnostics.
    """
    t0 = time.perf_counter()
    dirs = _directions_array(plan, directions)
    for m in plan.m_grid:
        order = _guard_order(plan, m)
        if order >= 1:
            raise GuardRefusalError(
                f"first projection is degenerate at order {order} for m={m}; "
                "the degenerate-scaling experiment applies instead")
    gh = descriptor_hash(plan.gen)
    rows = []
    for m in plan.m_grid:
        spec = _kernel_spec(plan, m)
        oracle = [hajek_variance(spec, plan.gen, u, v, plan.oracle_reps,
                                 child_seed(plan.master_seed, 0xA11, m, j))
                  for j, (u, v) in enumerate(dirs)]
        for n in plan.n_grid:
            block = _replicates(plan, n, m, "dirs", directions=dirs, scaled=True)
            for j in range(dirs.shape[0]):
                s_hat = oracle[j]
                if s_hat <= 0:
                    raise GuardRefusalError(
                        f"first-projection variance vanished for m={m}, direction {j}")
                vals = block[:, j]
                ks = stats.kstest(vals, "norm", args=(0.0, math.sqrt(s_hat)))
                rows.append((n, m, j, plan.L, plan.master_seed, gh,
                             float(vals.var(ddof=1)), s_hat,
                             float(ks.statistic), float(ks.pvalue),
                             float(stats.skew(vals)),
                             float(stats.kurtosis(vals))))
    meta = _base_metadata(plan)
    meta.update(wall_time_s=time.perf_counter() - t0)
    return ExperimentReport(
        "clt",
        ["n", "m", "dir", "L", "seed", "gen_hash", "rep_var", "hajek_var",
         "ks_stat", "ks_p", "skewness", "ex_kurtosis"],
        rows, meta)


def degenerate_check(plan: McPlan) -> ExperimentReport:
    """Scaling-law check when the first projection vanishes.

    With the first `order` projections degenerate, the leading component
    has order c0 = order + 1 and the deviation norm decays like n^(-c0/2).
    Checks the fitted log-log slope of the deviation-norm standard
    deviation and the two-sample KS distance between n^(c0/2)-rescaled
    samples at the two largest n.  Refuses non-degenerate plans (those
    belong to clt_check) and fully vanishing kernels.
    """
    t0 = time.perf_counter()
    gh = descriptor_hash(plan.gen)
    rows = []
    slopes, ks_results, powers = {}, {}, {}
    for m in plan.m_grid:
        order = _guard_order(plan, m)
        if order == 0:
            raise GuardRefusalError(
                f"first projection is non-degenerate for m={m}; "
                "the normal-limit experiment applies instead")
        if order >= m:
            raise GuardRefusalError(
                f"every projection vanishes for m={m}; no scaling law to check")
        c0 = order + 1
        power = c0 / 2.0
        powers[m] = power
        norms_by_n = {}
        for n in plan.n_grid:
            norms_by_n[n] = _replicates(plan, n, m, "norm")[:, 0]
        sds = {n: float(vals.std(ddof=1)) for n, vals in norms_by_n.items()}
        if len(plan.n_grid) >= 2:
            slope = float(np.polyfit(np.log(plan.n_grid),
                                     np.log([sds[n] for n in plan.n_grid]), 1)[0])
        else:
            slope = float("nan")
        slopes[m] = slope
        if len(plan.n_grid) >= 2:
            n_hi = sorted(plan.n_grid)[-2:]
            ks = stats.ks_2samp(norms_by_n[n_hi[0]] * n_hi[0] ** power,
                                norms_by_n[n_hi[1]] * n_hi[1] ** power)
            ks_results[m] = (float(ks.statistic), float(ks.pvalue))
        else:
            ks_results[m] = (float("nan"), float("nan"))
        for n in plan.n_grid:
            rows.append((n, m, plan.L, plan.master_seed, gh, plan.norm,
                         sds[n], order, power, slope,
                         ks_results[m][0], ks_results[m][1]))
    meta = _base_metadata(plan)
    meta.update(slopes=slopes, ks=ks_results, rescale_power=powers,
                wall_time_s=time.perf_counter() - t0)
    return ExperimentReport(
        "degenerate",
        ["n", "m", "L", "seed", "gen_hash", "norm", "sd_norm_dev",
         "deg_order", "rescale_power", "slope_loglog", "ks_stat", "ks_p"],
        rows, meta)


def dependent_clt_check(plan: McPlan, directions=None) -> ExperimentReport:
    """Normal-limit check under a q-dependent moving-average generator.

    The oracle variance is the truncated long-run series of the first
    projection along each direction (lag 0 term plus twice the positive
    lags, all over the stationary marginal law).  Refuses when the series
    estimate vanishes, which is the degenerate-dependent case.
    """
    t0 = time.perf_counter()
    if not isinstance(plan.gen, DependentGeneratorDescriptor):
        raise InvalidConfigError("dependent_clt_check needs a moving-average generator")
    dirs = _directions_array(plan, directions)
    gh = descriptor_hash(plan.gen)
    rows = []
    for m in plan.m_grid:
        spec = _kernel_spec(plan, m)
        sigma_dir = [directional_lag_variance(
            spec, plan.gen, u, v, plan.max_lag, plan.oracle_reps,
            child_seed(plan.master_seed, 0x51A, m, j))
            for j, (u, v) in enumerate(dirs)]
        for j, s in enumerate(sigma_dir):
            if s < plan.sigma_tol:
                raise GuardRefusalError(
                    f"long-run variance {s:.3g} below {plan.sigma_tol:.3g} for m={m}, "
                    f"direction {j}: degenerate dependent case")
        for n in plan.n_grid:
            block = _replicates(plan, n, m, "dirs", directions=dirs, scaled=True)
            scale = math.sqrt(n) / m
            norms = scale * _replicates(plan, n, m, "norm")[:, 0]
            for j in range(dirs.shape[0]):
                vals = block[:, j]
                ks = stats.kstest(vals, "norm", args=(0.0, math.sqrt(sigma_dir[j])))
                rows.append((n, m, j, plan.L, plan.master_seed, gh,
                             float(vals.var(ddof=1)), sigma_dir[j],
                             float(ks.statistic), float(ks.pvalue),
                             float(stats.skew(vals)), float(stats.kurtosis(vals)),
                             float(norms.mean()), float(norms.std(ddof=1)),
                             plan.max_lag, plan.gen.q))
    meta = _base_metadata(plan)
    meta.update(wall_time_s=time.perf_counter() - t0)
    return ExperimentReport(
        "dependent_clt",
        ["n", "m", "dir", "L", "seed", "gen_hash", "rep_var", "sigma_inf_dir",
         "ks_stat", "ks_p", "skewness", "ex_kurtosis",
         "mean_norm_scaled", "sd_norm_scaled", "max_lag", "q"],
        rows, meta)


# ------------------------------------------------------------------ table 1

@dataclass(frozen=True)
class _Table1Task:
    df: float
    n: int
    m_grid: Tuple[int, ...]
    master_seed: int


def _table1_block(task: _Table1Task, start: int, stop: int) -> np.ndarray:
    gen = student_t(task.df)
    out = np.empty((stop - start, len(task.m_grid)))
    sigma_sq = task.df / (task.df - 2.0)
    for l in range(start, stop):
        sample = draw_iid(gen, task.n, child_seed(task.master_seed, int(task.df), l))
        for j, m in enumerate(task.m_grid):
            cfg = EstimatorConfig(m=m, algorithm="closed_form")
            out[l - start, j] = estimate(sample, cfg).grid[0, 0] - sigma_sq / m
    return out


def table1(plan: McPlan, df_grid: Sequence[int] = tuple(range(3, 11)),
           interpretation: str = "both") -> ExperimentReport:
    """Deviation summaries of the scalar heavy-tail study grid.

    For each tail index df and each order m (one shared sample per
    replication across orders, n fixed), reports the signed mean deviation
    and the mean squared deviation from df/((df-2) m).  Because the target
    shrinks like 1/m, cross-order comparisons use the m^2-rescaled squared
    deviation, which measures every order against the common df/(df-2)
    scale; that column is emitted alongside the raw readings.

    The CSV always carries all three columns; `interpretation` selects
    which grids the markdown table mirrors ("mean_diff", "mean_sq_diff",
    or "both").
    """
    t0 = time.perf_counter()
    if interpretation not in ("mean_diff", "mean_sq_diff", "both"):
        raise InvalidConfigError(
            "interpretation must be 'mean_diff', 'mean_sq_diff' or 'both'")
    if not (isinstance(plan.gen, GeneratorDescriptor) and plan.gen.kind == "student_t"):
        raise InvalidConfigError("table1 runs on the scalar student_t family")
    if len(plan.n_grid) != 1:
        raise InvalidConfigError("table1 uses a single sample size")
    n = plan.n_grid[0]
    m_grid = plan.m_grid
    df_grid = tuple(int(k) for k in df_grid)
    if any(k < 3 for k in df_grid):
        raise InvalidConfigError("table1 tail indices need df >= 3")
    rows = []
    mean_diff = np.empty((len(m_grid), len(df_grid)))
    mean_sq = np.empty_like(mean_diff)
    for jdf, df in enumerate(df_grid):
        task = _Table1Task(float(df), n, m_grid, plan.master_seed)
        devs = fanout(plan.L, functools.partial(_table1_block, task), plan.workers)
        mean_diff[:, jdf] = devs.mean(axis=0)
        mean_sq[:, jdf] = (devs * devs).mean(axis=0)
        gh = descriptor_hash(student_t(df))
        for jm, m in enumerate(m_grid):
            cm = df / (df - 2.0) / m
            rows.append((df, m, n, plan.L, plan.master_seed, gh, cm,
                         float(mean_diff[jm, jdf]), float(mean_sq[jm, jdf]),
                         float(m * m * mean_sq[jm, jdf])))
    meta = _base_metadata(plan)
    sections = []
    if interpretation in ("mean_diff", "both"):
        sections.append(grid_markdown("mean deviation (signed)", "m", m_grid,
                                      "df", df_grid, mean_diff))
    if interpretation in ("mean_sq_diff", "both"):
        sections.append(grid_markdown("mean squared deviation", "m", m_grid,
                                      "df", df_grid, mean_sq))
        sections.append(grid_markdown(
            "mean squared deviation, m^2-rescaled", "m", m_grid, "df", df_grid,
            mean_sq * np.array([m * m for m in m_grid])[:, None]))
    meta.update(df_grid=df_grid, markdown_sections=sections,
                mean_diff=mean_diff, mean_sq_diff=mean_sq,
                wall_time_s=time.perf_counter() - t0)
    return ExperimentReport(
        "table1",
        ["df", "m", "n", "L", "seed", "gen_hash", "cm",
         "mean_diff", "mean_sq_diff", "mean_sq_diff_m2"],
        rows, meta)


def norm_report(t: TensorRep, restarts: int = 16, seed: int = 0,
                provenance: Optional[dict] = None) -> ExperimentReport:
    """All applicable crossnorms of one tensor, with method tags.

    Over an l2 factor space the injective / hilbert / projective values are
    checked for the crossnorm ordering (metadata key 'ordering_ok').
    """
    prov = {"seed": -1, "n": -1, "m": -1, "gen_hash": "-"}
    prov.update(provenance or {})
    rows = []
    values = {}
    for name in REPORT_NORMS:
        if name == "hilbert" and t.space.norm_kind != "l2":
            continue
        if name == "hilbert":
            value, method = hilbert_norm(t), "exact"
        elif name == "injective":
            res = injective_norm(t, restarts=restarts, seed=seed)
            value, method = res.value, res.method
        else:
            res = projective_norm(t, restarts=restarts, seed=seed)
            value, method = res.value, res.method
        values[name] = value
        rows.append((name, value, method, t.space.dim, t.space.norm_kind,
                     prov["seed"], prov["n"], prov["m"], prov["gen_hash"]))
    meta = {"software_version": __version__}
    if t.space.norm_kind == "l2":
        tol = 1e-10 * max(1.0, values["projective"])
        meta["ordering_ok"] = bool(
            values["injective"] <= values["hilbert"] + tol
            and values["hilbert"] <= values["projective"] + tol)
    return ExperimentReport(
        "norms",
        ["norm", "value", "method", "dim", "norm_kind", "seed", "n", "m", "gen_hash"],
        rows, meta)
