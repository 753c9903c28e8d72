from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagekit import groupoids as gp

from oracles import rational_rank

JS = gp.generate_params("jiang-su", 4)
RAZAK = gp.generate_params("razak", 3)
Z0 = gp.generate_params("z0", 3)


# ---------------------------------------------------------------------------
# brute-force oracles working only from end labels


def endpoint_vertices(stage):
    """Vertex of every end: its class key, or a private leaf for a missing end."""
    ends = []
    for t in (0, 1):
        ends.append([
            ("class", lab[0]) if (lab := stage.label(s, t)) is not None else ("leaf", s, t)
            for s in range(stage.strand_count)
        ])
    return ends


def components_by_union_find(stage) -> tuple[int, int, int]:
    a, b = endpoint_vertices(stage)
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in zip(a, b):
        parent[find(u)] = find(v)
    vertices = set(a) | set(b)
    roots = {find(v) for v in vertices}
    return len(vertices), len(a), len(roots)


def image_point(cm, s, t):
    """Where the end ``(s, t)`` lands: a target class, a leaf, or an interior point."""
    d = cm.bp.d
    x, y = divmod(s, d)
    value = gp.lam(cm.kinds[y], t)
    if value in (0, 1):
        lab = cm.target.label(x, int(value))
        return ("class", lab[0]) if lab is not None else ("leaf", x, int(value))
    return ("point", x, value)


def descent_violations(cm) -> list:
    """Source classes whose ends land at more than one point."""
    seen: dict = {}
    bad = []
    src = cm.source
    for t in (0, 1):
        for s in range(src.strand_count):
            lab = src.label(s, t)
            if lab is None:
                continue
            p = image_point(cm, s, t)
            if seen.setdefault(lab[0], p) != p:
                bad.append((s, t))
    return bad


def h1_rank_oracle(cm) -> int:
    """rank of p_* on H₁, as rank[∂; M] − rank ∂ over Q.

    Target strands are subdivided at their midpoints; a source strand maps
    to the lower half, the upper half, both halves or nothing according to
    its λ-type.
    """
    a, b = endpoint_vertices(cm.source)
    verts = {v: i for i, v in enumerate(sorted(set(a) | set(b), key=repr))}
    E = len(a)
    boundary = [[0] * E for _ in verts]
    for e, (u, v) in enumerate(zip(a, b)):
        if u != v:
            boundary[verts[u]][e] -= 1
            boundary[verts[v]][e] += 1
    halves = {"L": (1, 0), "U": (0, 1), "M": (0, 0), "ID": (1, 1)}
    n_t = cm.target.strand_count
    image = [[0] * E for _ in range(2 * n_t)]
    for e in range(E):
        x, y = divmod(e, cm.bp.d)
        lo, hi = halves[cm.kinds[y]]
        image[2 * x][e] = lo
        image[2 * x + 1][e] = hi
    return rational_rank(boundary + image) - rational_rank(boundary)


# ---------------------------------------------------------------------------
# parameters


def test_jiang_su_parameters():
    assert JS.values == ((2, 3), (14, 15), (434, 435), (378014, 378015))
    bp = JS.breakpoints(1)
    assert (bp.lo, bp.hi, bp.d) == (5, 28, 35)
    d0, d1 = 14 // 2, 15 // 3
    assert (d0, d1) == (7, 5) and bp.d % 15 == 5 and bp.d % 14 == 7
    assert all(ok for _, ok, _ in gp.check_params(JS))
    assert [JS.strand_count(n) for n in range(1, 5)] == [6, 210, 188790, 142_894_962_210]


def test_razak_and_z0_recursions():
    assert RAZAK.values == ((1, 1), (3, 3), (7, 21))
    assert RAZAK.breakpoints(1).d == 6
    bp = RAZAK.breakpoints(1)
    assert [bp.kind(y) for y in range(1, 7)] == ["L", "L", "L", "M", "U", "U"]
    assert Z0.values[1][0] == 5
    assert all(ok for _, ok, _ in gp.check_params(RAZAK) + gp.check_params(Z0))


def test_jiang_su_breakpoint_kinds():
    bp = JS.breakpoints(1)
    kinds = [bp.kind(y) for y in range(1, 36)]
    assert kinds == ["L"] * 5 + ["M"] * 23 + ["U"] * 7


@pytest.mark.parametrize(
    "variant, stages, start",
    [("jiang-su", 3, (3, 4)), ("jiang-su", 2, (5, 7)), ("razak", 4, (2, 1)), ("z0", 3, (1, 2, 2))],
)
def test_generated_parameters_satisfy_every_check(variant, stages, start):
    params = gp.generate_params(variant, stages, start=start)
    checks = gp.check_params(params)
    assert checks and all(ok for _, ok, _ in checks)


def test_check_params_catches_bad_sequences():
    bad = gp.StageParams("jiang-su", ((2, 3), (14, 16)))
    assert not all(ok for _, ok, _ in gp.check_params(bad))
    bad = gp.StageParams("razak", ((1, 1), (4, 4)))
    assert not all(ok for _, ok, _ in gp.check_params(bad))


def test_parameter_errors():
    with pytest.raises(ValueError):
        gp.generate_params("jiang-su", 2, start=(2, 4))
    with pytest.raises(ValueError):
        gp.generate_params("jiang-su", 2, start=(1, 3))
    with pytest.raises(ValueError):
        gp.generate_params("nope", 2)
    with pytest.raises(ValueError):
        gp.generate_params("razak", 0)
    with pytest.raises(ValueError):
        gp.StageParams("z0", ((1, 1),))
    with pytest.raises(ValueError):
        JS.breakpoints(4)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9))
def test_jiang_su_step_is_admissible(p, q):
    from math import gcd

    if gcd(p, q) != 1:
        return
    params = gp.generate_params("jiang-su", 2, start=(p, q))
    assert all(ok for _, ok, _ in gp.check_params(params))
    bp = params.breakpoints(1)
    counts = bp.counts()
    assert counts["L"] > 0 and counts["M"] > 0 and counts["U"] > 0


# ---------------------------------------------------------------------------
# stages and unit spaces


def test_first_jiang_su_stage():
    stage = gp.build_stage(JS, 1)
    assert stage.strand_count == 6
    g = gp.unit_space(stage)
    assert (g.V, g.E, g.b0, g.b1) == (5, 6, 1, 2)
    sizes = {}
    for t in (0, 1):
        for s in range(6):
            key = stage.label(s, t)[0]
            sizes[key] = sizes.get(key, 0) + 1
    assert sorted(sizes.values()) == [2, 2, 2, 3, 3]


def test_first_razak_stage_has_missing_ends():
    stage = gp.build_stage(RAZAK, 1)
    assert stage.strand_count == 2
    missing = [s for s in range(2) if stage.label(s, 0) is None]
    assert len(missing) == 1
    g = gp.unit_space(stage)
    assert g.b0 >= 1 and g.b1 == g.E - g.V + g.b0


def test_single_strand_stage():
    g = gp.unit_space(gp.build_stage(gp.StageParams("jiang-su", ((1, 1),)), 1))
    assert (g.V, g.E, g.b0, g.b1) == (2, 1, 1, 0)


@pytest.mark.parametrize("params, n", [(JS, 1), (JS, 2), (RAZAK, 1), (RAZAK, 2), (RAZAK, 3), (Z0, 1), (Z0, 2)])
def test_unit_space_against_union_find(params, n):
    stage = gp.build_stage(params, n)
    V, E, b0 = components_by_union_find(stage)
    g = gp.unit_space(stage)
    assert (g.V, g.E, g.b0) == (V, E, b0)


def test_jiang_su_unit_spaces_are_connected():
    graphs = [gp.unit_space(gp.build_stage(JS, 1))]
    for n in range(1, 4):
        cm = gp.build_connecting(JS, n)
        graphs.append(gp.unit_space(cm.source, cm))
    assert [g.b0 for g in graphs] == [1, 1, 1, 1]
    assert [g.b1 for g in graphs] == [2, 182, 187922, 142894206182]
    assert graphs[-1].method == "fibred"


def test_z0_has_two_components_at_every_stage():
    sizes = []
    for n in (1, 2, 3):
        g = gp.unit_space(gp.build_stage(Z0, n))
        assert g.b0 == 2
        sizes.append(g.component_sizes)
    assert sizes[0][0] == sizes[0][1]


def test_lazy_stage_needs_its_map():
    cm = gp.build_connecting(JS, 3)
    assert not cm.source.materialized
    with pytest.raises(ValueError):
        gp.unit_space(cm.source)
    assert gp.fibred_components(cm)["ok"]


def test_dot_output():
    g = gp.unit_space(gp.build_stage(JS, 1))
    dot = g.to_dot()
    assert dot.count(" -- ") == 6
    big = gp.unit_space(gp.build_stage(JS, 3))
    with pytest.raises(ValueError):
        big.to_dot()


# ---------------------------------------------------------------------------
# connecting maps


@pytest.mark.parametrize("params, n", [(JS, 1), (RAZAK, 1), (RAZAK, 2), (Z0, 1)])
def test_descent_against_brute_force(params, n):
    cm = gp.build_connecting(params, n)
    assert descent_violations(cm) == []
    assert gp.check_morphism_hypotheses(cm)["descent"].passed


@pytest.mark.parametrize("params", [JS, RAZAK, Z0])
def test_all_hypotheses_pass(params):
    for n in range(1, params.stages):
        report = gp.check_morphism_hypotheses(gp.build_connecting(params, n))
        assert report.passed, [c.to_json() for c in report.checks if not c.passed]
        assert [c.name for c in report.checks] == ["descent", "surjective", "proper", "fibrewise_bijective"]


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_seeded_gluings_pass(seed):
    params = gp.generate_params("jiang-su", 3, seed=seed)
    for n in (1, 2):
        assert gp.check_morphism_hypotheses(gp.build_connecting(params, n)).passed


def test_seed_changes_the_gluing():
    a = gp.build_connecting(gp.generate_params("jiang-su", 2, seed=1), 1).source
    b = gp.build_connecting(gp.generate_params("jiang-su", 2), 1).source
    assert [a.label(s, 0) for s in range(210)] != [b.label(s, 0) for s in range(210)]


def test_identity_map_passes():
    cm = gp.identity_connecting(JS, 2)
    assert gp.check_morphism_hypotheses(cm).passed
    h = gp.h1_transfer(cm)
    assert (h.rank, h.source_b1, h.target_b1) == (182, 182, 182)


@pytest.mark.parametrize("params", [JS, RAZAK, Z0])
def test_corrupted_gluing_fails_only_descent(params):
    overrides = gp.corrupt_gluing(params, 1)
    cm = gp.build_connecting(params, 1, overrides)
    report = gp.check_morphism_hypotheses(cm)
    failed = [c.name for c in report.checks if not c.passed]
    assert failed == ["descent"]
    witness = report["descent"].witness
    assert witness["strand"] in {s for s, _ in overrides}
    assert descent_violations(cm)


def test_strand_map_and_breakpoints():
    cm = gp.build_connecting(JS, 1)
    assert [cm.strand_map(s) for s in (0, 34, 35, 209)] == [0, 0, 1, 5]
    assert cm.kinds[:5] == ["L"] * 5 and cm.kinds[-7:] == ["U"] * 7


# ---------------------------------------------------------------------------
# H¹ transfer


@pytest.mark.parametrize("params, n", [(JS, 1), (RAZAK, 1), (RAZAK, 2), (Z0, 1)])
def test_h1_rank_against_oracle(params, n):
    cm = gp.build_connecting(params, n)
    h = gp.h1_transfer(cm, "explicit")
    assert h.rank == h1_rank_oracle(cm)
    assert h.injective


def test_h1_transfer_jiang_su():
    ranks = []
    for n in (1, 2, 3):
        h = gp.h1_transfer(gp.build_connecting(JS, n))
        assert h.injective
        ranks.append(h.rank)
    assert ranks == [2, 182, 187922]


def test_h1_methods_agree():
    cm = gp.build_connecting(JS, 1)
    a, b = gp.h1_transfer(cm, "explicit"), gp.h1_transfer(cm, "lifting")
    assert (a.rank, a.source_b1, a.target_b1) == (b.rank, b.source_b1, b.target_b1)
    assert a.hom.matrix.shape == (182, 2)


def test_h1_on_a_forest_is_zero():
    params = gp.StageParams("jiang-su", ((1, 1), (1, 1)))
    cm = gp.ConnectingMap(params, 1, gp.build_stage(params, 1), gp.Breakpoints(1, 1, 1), (1, 1), kinds=["ID"])
    h = gp.h1_transfer(cm, "explicit")
    assert (h.source_b1, h.target_b1, h.rank) == (0, 0, 0)


# ---------------------------------------------------------------------------
# towers


def test_truncation_depth_zero_is_the_stage():
    tower = gp.tower_truncate(JS, 2, 0)
    assert tower.maps == () and tower.divisor == 1
    s = np.arange(10)
    assert (tower.composite_strand(s) == s).all()


def test_composite_is_double_projection():
    tower = gp.tower_truncate(JS, 1, 2)
    s = np.arange(188790, dtype=np.int64)
    assert (tower.composite_strand(s) == tower.stepwise_strand(s)).all()
    assert (tower.composite_strand(s) == s // (35 * 899)).all()
    assert tower.divisor == 35 * 899


def test_composite_time_is_exact():
    tower = gp.tower_truncate(JS, 1, 2)
    s = np.array([0, 1000, 188789])
    for t in (0, 1):
        num, den = tower.composite_time(s, t)
        cm1, cm2 = tower.maps
        for i, strand in enumerate(s.tolist()):
            y2 = strand % cm2.bp.d
            mid = gp.lam(cm2.kinds[y2], t)
            y1 = (strand // cm2.bp.d) % cm1.bp.d
            assert Fraction(int(num[i]), den) == gp.lam(cm1.kinds[y1], mid)


@pytest.mark.parametrize("params", [JS, RAZAK, Z0])
def test_refinement_audit(params):
    audit = gp.refinement_audit(gp.tower_truncate(params, 1, params.stages - 1))
    assert audit["ok"], audit


def test_truncation_beyond_generated_stages():
    with pytest.raises(ValueError):
        gp.tower_truncate(RAZAK, 2, 2)
    with pytest.raises(ValueError):
        gp.tower_truncate(RAZAK, 1, -1)


def test_json_views():
    view = gp.build_connecting(JS, 1).to_json()
    assert view["breakpoints"] == {"lo": 5, "hi": 28, "d": 35}
    assert (view["from_stage"], view["to_stage"]) == (2, 1)
    assert JS.to_json()["values"][0] == [2, 3]
    assert gp.format_label(None) is None
