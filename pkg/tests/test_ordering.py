import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peacock2.families import (
    censor_mzero, counterexample_mrl_not_mtp2, diatomic, c_field,
    kemperman_phi, nonmrl_eps,
)
from peacock2.measures import Measure
from peacock2.ordering import (
    GridError, GridFunction2, GridFunction3, compose_mtp2, det2_criterion,
    icx_compare, mrl_compare, mtp2_check, pairwise_implies_mtp2_crosscheck,
    tp2_pair_check,
)


def grid3(tg, tpg, xg, fn):
    t, tp, x = map(np.asarray, (tg, tpg, xg))
    vals = np.array([[[fn(a, b, c) for c in x] for b in tp] for a in t])
    return GridFunction3(t, tp, x, vals)


# ---------------------------------------------------------------------------
# mrl / icx pointwise comparisons
# ---------------------------------------------------------------------------

def test_mrl_shifted_dirac_holds():
    grid = np.linspace(-3, 3, 25)
    assert mrl_compare(Measure.dirac(0.0), Measure.dirac(1.0), grid).holds
    assert not mrl_compare(Measure.dirac(1.0), Measure.dirac(0.0), grid).holds


def test_mrl_diatomic_pair_holds():
    fam = diatomic(0.5, 0.0)
    grid = np.linspace(-3, 4, 29)
    assert mrl_compare(fam.measure_at(1, 1), fam.measure_at(2, 2), grid).holds


def test_mrl_example33_is_mrl():
    fam = counterexample_mrl_not_mtp2()
    grid = np.linspace(-3, 5, 33)
    assert mrl_compare(fam.measure_at(1, 1), fam.measure_at(2, 1), grid).holds


def test_icx_dilation_holds():
    grid = np.linspace(-2, 2, 21)
    two = Measure.from_atoms([(-1, 0.5), (1, 0.5)])
    assert icx_compare(Measure.dirac(0.0), two, grid).holds
    assert not icx_compare(Measure.dirac(1.0), Measure.dirac(0.0), grid).holds


def test_icx_mu0_family_along_chain():
    split = nonmrl_eps(Measure.uniform(-1, 1), 0.0, 0.0)
    grid = np.linspace(-3, 3, 25)
    m1 = split.full.measure_at(1, 1)
    m2 = split.full.measure_at(2, 1)
    assert icx_compare(m1, m2, grid).holds


# ---------------------------------------------------------------------------
# det2 criterion
# ---------------------------------------------------------------------------

def test_det2_constant_in_t_field():
    C = grid3([0, 1, 2], [0, 1, 2], [-1, 0, 1], lambda t, tp, x: max(1.0 - x, 0.1))
    rep = det2_criterion(C)
    assert rep.holds and rep.worst >= -1e-15


def test_det2_diatomic_field_holds():
    fam = diatomic(0.5, 0.0)
    C = c_field(fam, [0, 0.5, 1, 2, 4], [0, 0.5, 1, 2, 4], np.linspace(-2, 5, 9))
    assert det2_criterion(C).holds


def test_det2_kemperman_fails_with_box_witness():
    phi = kemperman_phi(1.0, 1.0)
    rep = det2_criterion(phi)
    assert not rep.holds
    t1, tp1, t2, tp2, x1, x2 = rep.witness_points
    assert t1 <= 1 and tp1 <= 1 and x2 > 1      # low box in (t,t'), high x
    assert t2 > 1 and tp2 > 1 and x1 <= 1       # high box in (t,t'), low x


# ---------------------------------------------------------------------------
# tp2 pair checks
# ---------------------------------------------------------------------------

def test_tp2_kemperman_pairs_with_x_hold():
    phi = kemperman_phi(1.0, 1.0)
    assert tp2_pair_check(phi, "t,x").holds
    assert tp2_pair_check(phi, "tprime,x").holds


def test_tp2_example33_t_tprime_fails_with_printed_witness():
    fam = counterexample_mrl_not_mtp2()
    C = c_field(fam, [1.0, 2.0], [1.0, 2.0], [0.0])
    rep = tp2_pair_check(C, "t,tprime")
    assert not rep.holds
    # C(t,t',0) = t(t+t')/(2t+t'): det = (2/3)(4/3) - (3/4)(6/5) = 8/9 - 9/10
    assert rep.worst == pytest.approx(8.0 / 9.0 - 9.0 / 10.0, abs=1e-12)


def test_tp2_rank_one_field_holds_exactly():
    C = grid3([1, 2, 3], [1, 2], [0, 1, 2],
              lambda t, tp, x: (1 + t) * (2 + x) * (1.5 + tp))
    for pair in ("t,x", "tprime,x", "t,tprime"):
        rep = tp2_pair_check(C, pair)
        assert rep.holds
        assert abs(rep.worst) < 1e-8


def test_tp2_bad_pair_name():
    phi = kemperman_phi(1.0, 1.0)
    with pytest.raises(GridError):
        tp2_pair_check(phi, "x,t")


# ---------------------------------------------------------------------------
# mtp2 lattice check
# ---------------------------------------------------------------------------

def test_mtp2_kemperman_fails_at_paper_witness():
    phi = kemperman_phi(1.0, 1.0, (0.5, 1.5), (0.5, 1.5), (0.5, 1.5))
    rep = mtp2_check(phi)
    assert not rep.holds
    assert rep.worst == pytest.approx(-1.0, abs=1e-15)
    t1, tp1, x1, t2, tp2, x2 = rep.witness_points
    assert {(t1, tp1, x1), (t2, tp2, x2)} == {(0.5, 0.5, 1.5), (1.5, 1.5, 0.5)}


def test_mtp2_censor_mzero_uniform_holds():
    fam = censor_mzero(Measure.uniform(-1.0, 0.0))
    C = c_field(fam, [0, 0.5, 1, 2, 3, 4], [0, 0.5, 1, 2, 3, 4], np.linspace(-2, 5, 6))
    assert mtp2_check(C).holds


def test_mtp2_comonotone_product_equality():
    C = grid3([1, 2], [1, 2], [0, 1], lambda t, tp, x: t * (tp + 1) * (x + 2))
    rep = mtp2_check(C)
    assert rep.holds
    assert abs(rep.worst) < 1e-12


def test_mtp2_grid_cap():
    big = np.arange(13.0)
    with pytest.raises(GridError):
        mtp2_check(GridFunction3(big, big[:3], big[:3], np.ones((13, 3, 3))))


# ---------------------------------------------------------------------------
# crosscheck and composition
# ---------------------------------------------------------------------------

def test_crosscheck_diatomic():
    fam = diatomic(0.3, 1.0)
    out = pairwise_implies_mtp2_crosscheck(
        fam, [0, 0.5, 1, 2], [0, 0.5, 1, 2], np.linspace(-1, 4, 7))
    assert out["pairwise_holds"] and out["lattice"].holds


def test_crosscheck_example33_pairwise_fails():
    fam = counterexample_mrl_not_mtp2()
    out = pairwise_implies_mtp2_crosscheck(
        fam, [0.5, 1, 2], [0.5, 1, 2], np.linspace(-2, 4, 7))
    assert not out["pairwise"]["t,tprime"].holds
    assert not out["pairwise_holds"]


def test_compose_identity_kernel():
    f = GridFunction2(np.arange(3.0), np.arange(4.0), np.arange(12.0).reshape(3, 4) + 1)
    g = GridFunction2(np.arange(4.0), np.arange(4.0), np.eye(4))
    h = compose_mtp2(f, g, np.ones(4))
    np.testing.assert_allclose(h.values, f.values)


def test_compose_rank_one():
    a, b, c, d = np.array([1, 2.0]), np.array([1, 3.0]), np.array([2, 1.0]), np.array([1, 4.0])
    f = GridFunction2(np.arange(2.0), np.arange(2.0), np.outer(a, b))
    g = GridFunction2(np.arange(2.0), np.arange(2.0), np.outer(c, d))
    h = compose_mtp2(f, g, np.array([0.5, 0.5]))
    # rank-1 in, rank-1 out: all 2x2 dets vanish
    dets = h.values[0, 0] * h.values[1, 1] - h.values[0, 1] * h.values[1, 0]
    assert abs(dets) < 1e-12


def test_compose_dimension_mismatch():
    f = GridFunction2(np.arange(2.0), np.arange(3.0), np.ones((2, 3)))
    g = GridFunction2(np.arange(4.0), np.arange(2.0), np.ones((4, 2)))
    with pytest.raises(GridError):
        compose_mtp2(f, g, np.ones(3))


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_compose_preserves_tp2(seed):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(-1, 1, 4))
    ys = np.sort(rng.uniform(-1, 1, 4))
    zs = np.sort(rng.uniform(-1, 1, 4))
    # exp(s * x * y) is TP2 for s > 0
    f = GridFunction2(xs, ys, np.exp(rng.uniform(0.5, 2) * np.outer(xs, ys)))
    g = GridFunction2(ys, zs, np.exp(rng.uniform(0.5, 2) * np.outer(ys, zs)))
    h = compose_mtp2(f, g, rng.uniform(0.1, 1, 4))
    hh = GridFunction3(h.axis1, np.array([0.0]), h.axis2, h.values[:, None, :])
    assert tp2_pair_check(hh, "t,x").holds


# ---------------------------------------------------------------------------
# report semantics
# ---------------------------------------------------------------------------

def test_tolerance_monotone():
    phi = kemperman_phi(1.0, 1.0)
    tight = mtp2_check(phi, tol=1e-13)
    loose = mtp2_check(phi, tol=10.0)
    assert not tight.holds and loose.holds
    assert tight.worst == loose.worst


def test_report_json_shape():
    rep = det2_criterion(kemperman_phi(2.0, 3.0))
    js = rep.to_json()
    assert js["verdict"] == "fails"
    assert js["witness_indices"] is not None
    assert js["tolerance"] > 0


def test_negative_values_clamped_and_counted():
    vals = np.ones((2, 2, 2))
    vals[0, 0, 0] = -1e-9
    C = GridFunction3(np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                      np.array([0.0, 1.0]), vals)
    assert C.clamped == 1
    assert C.values.min() == 0.0


def test_crosscheck_censor_eps_family():
    from peacock2.families import censor_eps
    nu = Measure.from_atoms([(-1.0, 0.5), (0.0, 0.5)])
    fam = censor_eps(nu, 0.2)
    out = pairwise_implies_mtp2_crosscheck(
        fam, [0, 0.5, 1, 2], [0, 0.5, 1, 2], np.linspace(-2, 4, 7))
    assert out["pairwise_holds"] and out["lattice"].holds
