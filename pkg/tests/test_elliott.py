from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagekit import elliott
from stagekit.elliott import ConnectingData, ConstraintError, StageData


def _realizes(src, dst, c, **kw):
    bp = elliott.build_psi_blueprint(src, dst, c, **kw)
    on_K0, on_K1 = elliott.induced_K(bp)
    return bp, on_K0, on_K1


# ---------------------------------------------------------------------------
# stage data


def test_stage_data_validation():
    with pytest.raises(ValueError):
        StageData(0)
    with pytest.raises(ValueError):
        StageData(1, (1,))
    with pytest.raises(ValueError):
        StageData(1, k_free=-1)
    with pytest.raises(ValueError):
        StageData(2, order_unit=(1,))
    assert StageData(1, (4,), order_unit=(3, 6)).order_unit == (3, 2)


def test_stage_data_json_round_trip():
    s = StageData(2, (3, 4), 1, (5,), order_unit=(1, 2, 0, 1), G_generators=((1, -1, 0, 0),))
    assert StageData.from_json(s.to_json()) == s
    assert (s.n_torsion, s.n_k_torsion, s.n_k_summands) == (2, 1, 2)


@pytest.mark.parametrize(
    "x, positive",
    [((0, 0, 0), True), ((1, -3, 1), False), ((1, 0, 1), True), ((0, 1, 1), False), ((0, 2, 0), True)],
)
def test_positive_cone(x, positive):
    s = StageData(2, (4,))
    assert elliott.in_positive_cone(s, x) is positive


def test_meets_positive_cone():
    s = StageData(2)
    assert not elliott.meets_positive_cone(s, [(1, -1)])
    assert elliott.meets_positive_cone(s, [(1, 1)])
    assert elliott.meets_positive_cone(s, [(1, -1), (0, 1)])
    assert not elliott.meets_positive_cone(s, [])
    assert not elliott.meets_positive_cone(StageData(3), [(1, -1, 0), (0, 1, -1)])


# ---------------------------------------------------------------------------
# constraints


def test_multiplicity_bound_pass_and_fail():
    src, dst = StageData(1, (2,)), StageData(1, (4,))
    ok = elliott.validate_constraints(src, dst, ConnectingData.from_lists(src, dst, [[3]], [[2]], [[1]]))
    assert ok.passed and ok["k0_multiplicity"].passed
    bad_data = ConnectingData.from_lists(src, dst, [[1]], [[2]], [[1]])
    bad = elliott.validate_constraints(src, dst, bad_data)
    assert not bad["k0_multiplicity"].passed and not bad.passed
    with pytest.raises(ConstraintError):
        elliott.build_psi_blueprint(src, dst, bad_data)


def test_k1_multiplicity_bound():
    src, dst = StageData(1, (), 2, (3,)), StageData(1, (), 2, (3,))
    c = ConnectingData.from_lists(src, dst, [[2]], chi_hat=[[1, 1], [1, 1]], chi_tau=[[1]], chi_t=[[1, 1]])
    rep = elliott.validate_constraints(src, dst, c)
    assert not rep["k1_multiplicity"].passed  # needs 1 + 3 - 1 = 3
    c3 = ConnectingData.from_lists(src, dst, [[3]], chi_hat=[[1, 1], [1, 1]], chi_tau=[[1]], chi_t=[[1, 1]])
    assert elliott.validate_constraints(src, dst, c3)["k1_multiplicity"].passed


def test_without_torsion_only_positivity_matters():
    s = StageData(2)
    rep = elliott.validate_constraints(s, s, ConnectingData.from_lists(s, s, [[1, 1], [1, 1]]))
    assert rep.passed
    rep = elliott.validate_constraints(s, s, ConnectingData.from_lists(s, s, [[1, 0], [1, 1]]))
    assert not rep.passed and [f.name for f in rep.failures()] == ["gamma_hat_positive"]


def test_threshold_is_reported():
    s = StageData(1)
    rep = elliott.validate_constraints(s, s, ConnectingData.from_lists(s, s, [[4]], Gamma=5))
    assert not rep["gamma_hat_threshold"].passed
    rep = elliott.validate_constraints(s, s, ConnectingData.from_lists(s, s, [[5]], Gamma=5))
    assert rep["gamma_hat_threshold"].passed


def test_ill_defined_torsion_entry_is_flagged():
    src, dst = StageData(1, (2,)), StageData(1, (3,))
    c = ConnectingData.from_lists(src, dst, [[3]], [[1]], [[1]])
    rep = elliott.validate_constraints(src, dst, c)
    assert not rep["torsion_maps_well_defined"].passed
    with pytest.raises(ConstraintError, match="inconsistent torsion"):
        elliott.build_psi_blueprint(src, dst, c)


def test_rank_equation_does_not_gate():
    src = StageData(1, order_unit=(2,))
    dst = StageData(1, order_unit=(6,))
    rep = elliott.validate_constraints(src, dst, ConnectingData.from_lists(src, dst, [[3]]))
    assert rep["rank_equation"].passed and rep["order_unit_mapped"].passed
    dst_bad = StageData(1, order_unit=(5,))
    rep = elliott.validate_constraints(src, dst_bad, ConnectingData.from_lists(src, dst_bad, [[3]]))
    assert not rep["rank_equation"].passed and not rep["rank_equation"].gating


def test_shape_mismatch_raises():
    s = StageData(1)
    with pytest.raises(ValueError):
        ConnectingData.from_lists(s, s, [[1, 2]])


# ---------------------------------------------------------------------------
# blueprints


def test_torsion_example_blueprint():
    src, dst = StageData(1, (2,)), StageData(1, (4,))
    c = ConnectingData.from_lists(src, dst, [[3]], [[2]], [[1]])
    bp, on_K0, _ = _realizes(src, dst, c)
    k0 = [s for s in bp.summands if s.side == "K0"]
    # one scalar copy, the torsion map Ψ₂: X_4 → X_2, and the twisted bundle
    assert [s.kind for s in k0] == ["evaluation", "psi_tau", "psi_t"]
    assert sum(s.multiplicity for s in k0) == 3
    assert on_K0.matrix.to_rows() == [[3, 0], [1, 2]]
    assert on_K0 == c.gamma(src, dst)


def test_no_torsion_blueprint_is_scalar():
    s = StageData(2)
    c = ConnectingData.from_lists(s, s, [[2, 1], [3, 4]])
    bp, on_K0, on_K1 = _realizes(s, s, c)
    assert on_K0.matrix.to_rows() == [[2, 1], [3, 4]]
    assert {x.kind for x in bp.summands} <= {"evaluation", "psi_t", "bundle"}
    assert on_K1.matrix.shape == (0, 0)


def test_w_type_blueprint_has_only_multiplicity_summands():
    s = StageData(1)
    bp, on_K0, on_K1 = _realizes(s, s, ConnectingData.from_lists(s, s, [[3]]))
    assert on_K0.matrix.to_rows() == [[3]]
    assert all(x.kind in ("evaluation", "psi_t") for x in bp.summands)
    assert bp.rank_audit()["ok"]


@pytest.mark.parametrize("m", [1, 2, 5])
def test_sphere_summand_realizes_chi_hat(m):
    s = StageData(1, (), 1)
    c = ConnectingData.from_lists(s, s, [[max(m, 1)]], chi_hat=[[m]])
    for shortcut in (True, False):
        bp, _, on_K1 = _realizes(s, s, c, circle_shortcut=shortcut)
        assert on_K1.matrix.to_rows() == [[m]]
        assert bp.k1_degree == (1 if shortcut else 3)


def test_circle_shortcut_defaults_and_limits():
    s = StageData(1, (), 1)
    bp = elliott.build_psi_blueprint(s, s, ConnectingData.from_lists(s, s, [[1]], chi_hat=[[1]]))
    assert bp.k1_degree == 1
    t = StageData(1, (), 0, (3,))
    c = ConnectingData.from_lists(t, t, [[2]], chi_tau=[[1]])
    assert elliott.build_psi_blueprint(t, t, c).k1_degree == 3
    with pytest.raises(ValueError):
        elliott.build_psi_blueprint(t, t, c, circle_shortcut=True)


def test_blueprint_is_deterministic():
    rng = random.Random("fixed")
    src, dst, c = elliott.random_instance(rng)
    a = elliott.build_psi_blueprint(src, dst, c).to_json()
    b = elliott.build_psi_blueprint(src, dst, c).to_json()
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_on_random_instances(seed):
    src, dst, c = elliott.random_instance(random.Random(seed), max_dim=3, max_order=8)
    assert elliott.validate_constraints(src, dst, c).passed
    bp, on_K0, on_K1 = _realizes(src, dst, c)
    assert on_K0.matrix == c.gamma(src, dst).matrix
    assert on_K1.matrix == c.chi(src, dst).matrix
    assert bp.rank_audit()["ok"]
    # order unit goes to order unit
    assert on_K0(src.order_unit) == dst.order_unit


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_connecting_data_from_homs_round_trip(seed):
    src, dst, c = elliott.random_instance(random.Random(seed), max_dim=3)
    again = ConnectingData.from_homs(src, dst, c.gamma(src, dst), c.chi(src, dst))
    assert again.gamma(src, dst) == c.gamma(src, dst)
    assert again.chi(src, dst) == c.chi(src, dst)
    assert ConnectingData.from_json(src, dst, c.to_json()) == c


def test_random_instance_respects_bounds():
    for i in range(50):
        src, dst, c = elliott.random_instance(random.Random(i))
        for s in (src, dst):
            assert 1 <= s.free_count <= 4 and len(s.torsion) <= 3
            assert all(2 <= d <= 12 for d in s.torsion + s.k_torsion)
        assert all(1 <= x <= 9 for x in c.gamma_hat.data)
