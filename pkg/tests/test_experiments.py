import math

import numpy as np
import pytest

from ucov import (
    Element,
    GuardRefusalError,
    InvalidConfigError,
    McPlan,
    SpaceDescriptor,
    TensorRep,
    clt_check,
    consistency_curve,
    degenerate_check,
    dependent_clt_check,
    finite_support,
    gaussian_kl,
    ma_wrap,
    norm_report,
    outer,
    rademacher,
    student_t,
    table1,
)

NORMAL = gaussian_kl(1, (1.0,))


def small_plan(**kw):
    base = dict(gen=NORMAL, L=64, n_grid=(40, 80), m_grid=(1,), master_seed=5,
                guard_reps=2048, oracle_reps=20_000)
    base.update(kw)
    return McPlan(**base)


def test_plan_validation():
    with pytest.raises(InvalidConfigError):
        small_plan(L=0)
    with pytest.raises(InvalidConfigError):
        small_plan(m_grid=(50,))  # m larger than the smallest n
    with pytest.raises(InvalidConfigError):
        small_plan(norm="nuclear")
    with pytest.raises(InvalidConfigError):
        small_plan(gen="not-a-generator")


def test_reports_are_deterministic_and_worker_independent():
    a = consistency_curve(small_plan()).to_csv()
    b = consistency_curve(small_plan()).to_csv()
    c = consistency_curve(small_plan(workers=4)).to_csv()
    assert a == b == c


def test_consistency_slope_near_root_n():
    plan = small_plan(L=256, n_grid=(50, 200, 800))
    rep = consistency_curve(plan)
    assert rep.metadata["slopes"][1] == pytest.approx(-0.5, abs=0.12)
    means = [row[7] for row in rep.rows]
    assert means == sorted(means, reverse=True)


def test_consistency_constant_generator_is_exactly_zero():
    const = finite_support([[2.0]], [1.0])
    rep = consistency_curve(small_plan(gen=const, L=16))
    assert all(row[7] == 0.0 for row in rep.rows)
    assert math.isnan(rep.metadata["slopes"][1])


def test_guard_symmetry_between_clt_and_degenerate():
    deg = small_plan(gen=rademacher(), m_grid=(2,), L=32)
    with pytest.raises(GuardRefusalError, match="degenerate-scaling"):
        clt_check(deg)
    degenerate_check(deg)  # accepted
    nondeg = small_plan(L=32)
    with pytest.raises(GuardRefusalError, match="normal-limit"):
        degenerate_check(nondeg)
    clt_check(nondeg)  # accepted


def test_degenerate_refuses_fully_vanishing_kernel():
    const = finite_support([[1.0]], [1.0])
    with pytest.raises(GuardRefusalError, match="every projection"):
        degenerate_check(small_plan(gen=const, m_grid=(1,), L=16))


def test_clt_report_contents():
    rep = clt_check(small_plan(L=300, n_grid=(200,)))
    (row,) = rep.rows
    cols = dict(zip(rep.columns, row))
    assert cols["hajek_var"] == pytest.approx(2.0, rel=0.1)
    assert cols["rep_var"] == pytest.approx(2.0, rel=0.35)
    assert 0.0 <= cols["ks_p"] <= 1.0


def test_clt_direction_validation():
    bad = [(np.ones(3), np.ones(3))]
    with pytest.raises(InvalidConfigError):
        clt_check(small_plan(L=16), directions=bad)


def test_degenerate_rescale_power_tracks_order():
    rep = degenerate_check(small_plan(gen=rademacher(), m_grid=(2,), L=128,
                                      n_grid=(50, 100)))
    cols = dict(zip(rep.columns, rep.rows[0]))
    assert cols["deg_order"] == 1
    assert cols["rescale_power"] == 1.0


def test_dependent_requires_ma_generator():
    with pytest.raises(InvalidConfigError):
        dependent_clt_check(small_plan())


def test_dependent_refuses_vanishing_long_run_variance():
    const_dep = ma_wrap(finite_support([[1.0]], [1.0]), (1.0, 1.0))
    plan = small_plan(gen=const_dep, L=16, oracle_reps=2000)
    with pytest.raises(GuardRefusalError, match="long-run variance"):
        dependent_clt_check(plan)


def test_dependent_report_and_q_column():
    dep = ma_wrap(NORMAL, (1.0, 1.0))
    plan = small_plan(gen=dep, L=200, n_grid=(300,), max_lag=2,
                      oracle_reps=40_000)
    rep = dependent_clt_check(plan)
    cols = dict(zip(rep.columns, rep.rows[0]))
    assert cols["q"] == 1
    assert cols["sigma_inf_dir"] == pytest.approx(12.0, rel=0.15)
    assert cols["rep_var"] == pytest.approx(12.0, rel=0.35)
    assert cols["mean_norm_scaled"] > 0


def test_table1_validation_and_reproducibility():
    plan = McPlan(gen=student_t(5), L=50, n_grid=(10,),
                  m_grid=tuple(range(1, 11)), master_seed=3)
    with pytest.raises(InvalidConfigError):
        table1(plan, df_grid=(2, 3))
    with pytest.raises(InvalidConfigError):
        table1(McPlan(gen=NORMAL, L=10, n_grid=(10,), m_grid=(1,), master_seed=0))
    a = table1(plan, df_grid=(3, 7)).to_csv()
    b = table1(plan, df_grid=(3, 7)).to_csv()
    assert a == b


def test_table1_interpretation_selects_markdown_grids():
    plan = McPlan(gen=student_t(5), L=20, n_grid=(10,), m_grid=(1, 2),
                  master_seed=3)
    md_both = table1(plan, df_grid=(5,), interpretation="both").to_markdown()
    md_sq = table1(plan, df_grid=(5,), interpretation="mean_sq_diff").to_markdown()
    md_diff = table1(plan, df_grid=(5,), interpretation="mean_diff").to_markdown()
    assert "mean deviation (signed)" in md_both and "mean squared deviation" in md_both
    assert "mean deviation (signed)" not in md_sq
    assert "mean squared deviation" not in md_diff
    with pytest.raises(InvalidConfigError):
        table1(plan, df_grid=(5,), interpretation="median")


def test_table1_mean_diff_is_small_for_large_L():
    # literal signed reading: centered at 0 by unbiasedness
    plan = McPlan(gen=student_t(9), L=4000, n_grid=(10,), m_grid=(1,),
                  master_seed=8)
    rep = table1(plan, df_grid=(9,))
    cols = dict(zip(rep.columns, rep.rows[0]))
    assert abs(cols["mean_diff"]) < 0.05


def test_norm_report_rank_one_example():
    sp = SpaceDescriptor(2, "l2")
    t = outer(Element(sp, np.array([3.0, 4.0])), Element(sp, np.array([1.0, 0.0])))
    rep = norm_report(t)
    values = {row[0]: row[1] for row in rep.rows}
    assert values["injective"] == pytest.approx(5.0)
    assert values["hilbert"] == pytest.approx(5.0)
    assert values["projective"] == pytest.approx(5.0)
    assert rep.metadata["ordering_ok"]


def test_norm_report_provenance_and_l1_skips_hilbert():
    t = TensorRep(SpaceDescriptor(2, "l1"), np.eye(2))
    rep = norm_report(t, provenance={"seed": 9, "n": 20, "m": 2, "gen_hash": "ab"})
    names = [row[0] for row in rep.rows]
    assert "hilbert" not in names
    assert all(row[5] == 9 and row[6] == 20 for row in rep.rows)
    assert "ordering_ok" not in rep.metadata
