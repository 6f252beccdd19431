"""Command-line front end: experiment runner plus estimator and data utilities.

Experiment subcommands (table1, consistency, clt, degenerate,
dependent-clt, norms) read a flat TOML config mirroring McPlan fields and
write <experiment>.csv and <experiment>.md into --out-dir.  Utility
subcommands: `estimate` (sample CSV -> covariance tensor CSV), `gen`
(generator spec -> sample CSV fixture), `decompose` (component U-statistic
of one projection order plus a degeneracy diagnostic JSON on stdout).

Exit codes: 0 success, 2 guard refusal (the plan's premise fails its
diagnostic), 1 config or I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10: external backport, same API
    import tomli as tomllib

from . import __version__
from .datagen import (
    DependentGeneratorDescriptor,
    descriptor_hash,
    draw_dependent,
    draw_iid,
    finite_support,
    gaussian_kl,
    ma_wrap,
    rademacher,
    student_t,
)
from .errors import GuardRefusalError, InvalidConfigError, UcovError
from .estimator import EstimatorConfig, estimate, population_cm_exact
from .experiments import (
    McPlan,
    clt_check,
    consistency_curve,
    degenerate_check,
    dependent_clt_check,
    norm_report,
    table1,
)
from .hoeffding import KernelSpec, component_ustat, degeneracy_profile
from .reporting import (
    read_sample_csv,
    read_tensor_csv,
    write_sample_csv,
    write_tensor_csv,
)
from .seeding import child_seed
from .spaces import Element
from .tensor import TensorRep

EXPERIMENTS = ("table1", "consistency", "clt", "degenerate", "dependent-clt", "norms")


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors follow the config-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidConfigError(message)


def _load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise InvalidConfigError(f"config is missing required key '{key}'")
    return cfg[key]


def _generator_from(cfg: dict):
    kind = _require(cfg, "gen_kind")
    nk = cfg.get("gen_norm_kind", "l2")
    if kind == "student_t":
        base = student_t(_require(cfg, "gen_df"), nk)
    elif kind == "rademacher":
        base = rademacher(nk)
    elif kind == "gaussian_kl":
        base = gaussian_kl(_require(cfg, "gen_dim"), cfg.get("gen_eigenvalues"), nk)
    elif kind == "finite_support":
        base = finite_support(_require(cfg, "gen_atoms"), _require(cfg, "gen_probs"), nk)
    else:
        raise InvalidConfigError(f"unknown gen_kind {kind!r}")
    ma = cfg.get("ma_coeffs")
    if ma is not None:
        base = ma_wrap(base, ma)
    return base


def _plan_from(cfg: dict, args) -> McPlan:
    seed = args.seed if args.seed is not None else cfg.get("master_seed")
    if seed is None:
        raise InvalidConfigError("master_seed missing from config (or pass --seed)")
    workers = args.workers if args.workers is not None else cfg.get("workers", 1)
    return McPlan(
        gen=_generator_from(cfg),
        L=_require(cfg, "L"),
        n_grid=_as_tuple(_require(cfg, "n_grid")),
        m_grid=_as_tuple(_require(cfg, "m_grid")),
        master_seed=int(seed),
        kernel=cfg.get("kernel", "identity"),
        algorithm=cfg.get("algorithm", "auto"),
        norm=cfg.get("norm", "hilbert"),
        workers=int(workers),
        guard_reps=cfg.get("guard_reps", 4096),
        oracle_reps=cfg.get("oracle_reps", 200_000),
        max_lag=cfg.get("max_lag", 8),
        degeneracy_tol=cfg.get("degeneracy_tol", 1e-3),
        sigma_tol=cfg.get("sigma_tol", 1e-3),
    )


def _directions_from(cfg: dict):
    raw = cfg.get("directions")
    if raw is None:
        return None
    return [(np.asarray(u, dtype=float), np.asarray(v, dtype=float)) for u, v in raw]


def _norms_report(cfg: dict, args):
    """Either report a tensor file, or one sampled estimator deviation."""
    tensor_path = cfg.get("tensor_csv")
    if tensor_path is not None:
        t = read_tensor_csv(tensor_path, cfg.get("gen_norm_kind", "l2"))
        return norm_report(t, seed=int(cfg.get("norm_seed", 0)))
    plan = _plan_from(cfg, args)
    n, m = plan.n_grid[0], plan.m_grid[0]
    seed = child_seed(plan.master_seed, n, m, 0)
    if isinstance(plan.gen, DependentGeneratorDescriptor):
        sample = draw_dependent(plan.gen, n, seed)
    else:
        sample = draw_iid(plan.gen, n, seed)
    est = estimate(sample, EstimatorConfig(m=m, kernel=plan.kernel,
                                           algorithm=plan.algorithm))
    dev = TensorRep(sample.space, est.grid - population_cm_exact(plan.gen, m).grid)
    prov = {"seed": plan.master_seed, "n": n, "m": m,
            "gen_hash": descriptor_hash(plan.gen)}
    return norm_report(dev, seed=int(cfg.get("norm_seed", 0)), provenance=prov)


def _run_experiment(args) -> int:
    cfg = _load_config(args.config)
    if args.cmd == "norms":
        report = _norms_report(cfg, args)
    elif args.cmd == "table1":
        plan = _plan_from(cfg, args)
        report = table1(plan,
                        df_grid=_as_tuple(cfg.get("df_grid", tuple(range(3, 11)))),
                        interpretation=cfg.get("interpretation", "both"))
    elif args.cmd == "consistency":
        report = consistency_curve(_plan_from(cfg, args))
    elif args.cmd == "clt":
        report = clt_check(_plan_from(cfg, args), _directions_from(cfg))
    elif args.cmd == "degenerate":
        report = degenerate_check(_plan_from(cfg, args))
    else:  # dependent-clt
        report = dependent_clt_check(_plan_from(cfg, args), _directions_from(cfg))
    stem = args.cmd.replace("-", "_")
    csv_path, md_path = report.write(args.out_dir, stem)
    print(csv_path)
    print(md_path)
    return 0


def _run_estimate(args) -> int:
    sample = read_sample_csv(args.input, args.norm_kind)
    if args.theta == "zero":
        theta = None
    else:
        row = np.loadtxt(args.theta, delimiter=",", ndmin=2)
        theta = Element(sample.space, row[0])
    cfg = EstimatorConfig(m=args.m, theta=theta, kernel=args.kernel,
                          algorithm=args.algorithm.replace("-", "_"))
    write_tensor_csv(estimate(sample, cfg), args.out)
    print(args.out)
    return 0


def _run_gen(args) -> int:
    gen = _generator_from(_load_config(args.spec))
    if isinstance(gen, DependentGeneratorDescriptor):
        sample = draw_dependent(gen, args.n, args.seed)
    else:
        sample = draw_iid(gen, args.n, args.seed)
    write_sample_csv(sample, args.out)
    print(args.out)
    return 0


def _run_decompose(args) -> int:
    cfg = _load_config(args.config)
    gen = _generator_from(cfg)
    seed = args.seed if args.seed is not None else int(_require(cfg, "master_seed"))
    n = int(_as_tuple(_require(cfg, "n_grid"))[0])
    m = int(_as_tuple(_require(cfg, "m_grid"))[0])
    if not 0 <= args.order <= m:
        raise InvalidConfigError(f"projection order must lie in 0..{m}")
    reps = int(cfg.get("reps", 4096))
    tol = float(cfg.get("degeneracy_tol", 1e-3))
    spec = KernelSpec(gen.space, m)
    if isinstance(gen, DependentGeneratorDescriptor):
        raise InvalidConfigError("decompose works on i.i.d. generators")
    sample = draw_iid(gen, n, child_seed(seed, n, m, 0))
    comp = component_ustat(sample, spec, args.order, gen, reps=reps,
                           seed=child_seed(seed, 0xDEC))
    write_tensor_csv(comp, args.out)
    profile = degeneracy_profile(spec, gen, reps, child_seed(seed, 0xD16), tol=tol)
    print(json.dumps(profile))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ucov",
                     description="subset-mean covariance estimation toolkit")
    parser.add_argument("--version", action="version", version=f"ucov {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="TOML plan file")
        p.add_argument("--out-dir", required=True, help="report output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (never changes emitted numbers)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's master_seed")
        p.set_defaults(func=_run_experiment)

    p = sub.add_parser("estimate", help="estimate the covariance of a sample CSV")
    p.add_argument("--input", required=True, help="sample CSV, one row per element")
    p.add_argument("--m", type=int, required=True, help="subset size")
    p.add_argument("--theta", default="zero",
                   help="'zero' or a CSV path holding the centering element")
    p.add_argument("--kernel", default="identity", choices=("identity", "sign"))
    p.add_argument("--algorithm", default="auto",
                   choices=("auto", "enumerate", "closed-form"))
    p.add_argument("--norm-kind", default="l2", choices=("l1", "l2", "linf"))
    p.add_argument("--out", required=True, help="output tensor CSV")
    p.set_defaults(func=_run_estimate)

    p = sub.add_parser("gen", help="draw a seeded sample fixture")
    p.add_argument("--spec", required=True, help="TOML generator spec (gen_* keys)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output sample CSV")
    p.set_defaults(func=_run_gen)

    p = sub.add_parser("decompose",
                       help="component U-statistic of one projection order")
    p.add_argument("--config", required=True, help="TOML plan file")
    p.add_argument("--order", type=int, required=True, help="projection order c")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output tensor CSV")
    p.set_defaults(func=_run_decompose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except GuardRefusalError as exc:
        print(f"ucov: refused: {exc}", file=sys.stderr)
        return 2
    except (UcovError, OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"ucov: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
