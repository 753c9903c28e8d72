"""The eight acceptance criteria, one test each.

A summary line per criterion is printed at the end of the pytest run (see
``conftest.py``).  Where a preset exists it is the entry point, so these
tests exercise the same code path as ``stagekit preset <name>``.
"""

from __future__ import annotations

import json
import random
import time
from math import gcd

import jsonschema
import pytest

from stagekit import blocks, cli, cw, elliott, groupoids
from stagekit.intlin import FGAbGroup, cokernel

from oracles import agrees_with_oracle, mapping_cone_k_theory

Z, ZERO = FGAbGroup.Z(), FGAbGroup.trivial()
SCHEMA = cli.load_schema()


def run_preset(name: str) -> dict:
    report = cli.run(cli.PRESETS[name])
    obj = json.loads(report.dumps())
    jsonschema.validate(obj, SCHEMA)
    return obj


def records(obj: dict, prefix: str = "") -> dict[str, dict]:
    return {r["id"]: r for r in obj["records"] if r["id"].startswith(prefix)}


@pytest.mark.criterion(1, "Moore-space cohomology")
def test_criterion_1_moore_space_cohomology():
    for N in range(2, 13):
        X = cw.build_moore_X(N)
        assert [cw.cohomology(X, k) for k in range(4)] == [Z, ZERO, FGAbGroup.cyclic(N), ZERO]
        assert cw.cohomology(cw.build_moore_Y(N), 3) == FGAbGroup.cyclic(N)
    report = run_preset("lemmas-s3")
    moore = records(report, "moore-x/")
    assert len(moore) == 11 and all(r["passed"] for r in moore.values())
    assert all(r["passed"] for r in records(report, "moore-y/").values())


@pytest.mark.criterion(2, "induced maps of the degree and collapse maps")
def test_criterion_2_induced_maps():
    triples = [(N, Np, m) for N in range(2, 9) for Np in range(2, 9) for m in range(1, 13) if (m * N) % Np == 0]
    for N, Np, m in triples:
        f = cw.build_psi_star(N, Np, m)
        h2 = cw.induced_map(f, 2)
        assert h2.domain.canonical() == FGAbGroup.cyclic(N)
        assert h2.codomain.canonical() == FGAbGroup.cyclic(Np)
        assert h2.matrix.to_rows() == [[m % Np]]
        assert cw.induced_map(f, 0).matrix.to_rows() == [[1]]
        h3 = cw.induced_map(cw.build_suspended_psi_star(N, Np, m), 3)
        assert h3.matrix.to_rows() == [[m % Np]]
    for N in range(2, 13):
        h = cw.induced_map(cw.build_omega_star(N), 3)
        assert h.domain.canonical() == Z and h.codomain.canonical() == FGAbGroup.cyclic(N)
        assert cokernel(h).is_trivial
    report = run_preset("lemmas-s3")
    for prefix in ("psi/", "suspended-psi/", "collapse/"):
        group = records(report, prefix)
        assert group and all(r["passed"] for r in group.values())
    assert len(records(report, "psi/")) == len(triples)


@pytest.mark.criterion(3, "building-block K-theory against the mapping-cone oracle")
def test_criterion_3_building_blocks():
    checked = 0
    for p in range(1, 51):
        for q in range(1, 51):
            if gcd(p, q) != 1:
                continue
            A = blocks.jiang_su_block(p, q)
            K0, K1 = blocks.k_theory(A)
            assert (K0, K1) == (Z, ZERO), (p, q)
            assert agrees_with_oracle(K0, K1, mapping_cone_k_theory(A)), (p, q)
            checked += 1
    for a in range(1, 11):
        for b in (1, 2, 3):
            A = blocks.razak_block(a, b)
            K0, K1 = blocks.k_theory(A)
            assert (K0, K1) == (ZERO, ZERO), (a, b)
            assert agrees_with_oracle(K0, K1, mapping_cone_k_theory(A)), (a, b)
            checked += 1
    assert checked > 1500
    report = cli.run(cli.RunConfig("blocks"))
    assert report.passed


@pytest.mark.criterion(4, "Elliott round trip on random instances")
def test_criterion_4_elliott_round_trip():
    for i in range(200):
        src, dst, c = elliott.random_instance(random.Random(f"0:{i}"))
        for s in (src, dst):
            assert s.free_count <= 4 and len(s.torsion) <= 3
            assert all(d <= 12 for d in s.torsion + s.k_torsion)
        assert all(1 <= x <= 9 for x in c.gamma_hat.data)
        bp = elliott.build_psi_blueprint(src, dst, c)
        on_K0, on_K1 = elliott.induced_K(bp)
        assert on_K0.matrix == c.gamma(src, dst).matrix
        assert on_K1.matrix == c.chi(src, dst).matrix
    report = run_preset("elliott-roundtrip")
    assert len(records(report, "roundtrip/")) == 200
    controls = records(report, "control/")
    assert set(controls) >= {"control/multiplicity-pass", "control/multiplicity-fail", "control/threshold"}
    assert report["summary"]["failed"] == 0


@pytest.mark.criterion(5, "Jiang-Su tower over four stages")
def test_criterion_5_jiang_su_tower():
    start = time.perf_counter()
    report = run_preset("jiang-su")
    elapsed = time.perf_counter() - start
    assert elapsed <= 10.0, f"{elapsed:.1f} s"
    recs = records(report)
    assert report["summary"]["failed"] == 0
    params = records(report, "params/")
    for n in (1, 2, 3):
        for check in ("divides", "ratio", "remainders", "lambda_ranges", "strand_product"):
            assert params[f"params/{check}[{n}]"]["passed"]
    assert "d1=5|r0, d0=7|r1" in params["params/remainders[1]"]["data"]["detail"]
    assert all(r["passed"] for r in params.values())
    for n in (1, 2, 3):
        for check in ("descent", "surjective", "proper", "fibrewise_bijective"):
            assert recs[f"map-{n + 1}-{n}/{check}"]["passed"]
    for n in (1, 2, 3, 4):
        g = recs[f"stage-{n}/unit-space"]["data"]
        assert g["b0"] == 1 and g["b1"] == g["E"] - g["V"] + 1
    for n in (1, 2, 3):
        h = recs[f"map-{n + 1}-{n}/h1-transfer"]["data"]
        assert h["injective"] and h["rank"] == h["source_b1"]
    assert recs["tower/betti"]["data"]["b1"] == [2, 182, 187922, 142894206182]


@pytest.mark.criterion(6, "Razak and Z0 towers over three stages")
def test_criterion_6_razak_and_z0_towers():
    for name in ("razak", "z0"):
        report = run_preset(name)
        recs = records(report)
        assert report["summary"]["failed"] == 0
        assert all(r["passed"] for r in records(report, "params/").values())
        for n in (1, 2):
            for check in ("descent", "surjective", "proper", "fibrewise_bijective"):
                assert recs[f"map-{n + 1}-{n}/{check}"]["passed"]
        assert recs["block/unital"]["data"]["unital"] is False
        again = run_preset(name)
        assert records(again)["tower/betti"]["data"]["b0"] == recs["tower/betti"]["data"]["b0"]
    params = groupoids.generate_params("razak", 3)
    assert params.values == ((1, 1), (3, 3), (7, 21))
    assert groupoids.generate_params("z0", 3).values[1] == (5, 5, 1)
    assert not blocks.check_unital(blocks.razak_block(1, 1))
    assert blocks.check_unital(blocks.jiang_su_block(2, 3))
    assert records(run_preset("jiang-su"))["block/unital"]["data"]["unital"] is True


@pytest.mark.criterion(7, "negative controls")
def test_criterion_7_negative_controls(tmp_path):
    code = cli.main(["preset", "negative-controls", "--out", str(tmp_path)])
    assert code == 1
    report = json.loads((tmp_path / "negative-controls.json").read_text(encoding="utf-8"))
    jsonschema.validate(report, SCHEMA)
    failed = [r for r in report["records"] if not r["passed"]]
    assert [r["id"] for r in failed] == ["corrupted-gluing/descent"]
    assert isinstance(failed[0]["witness"]["strand"], int)
    assert records(report)["psi-divisibility/rejected"]["passed"]
    with pytest.raises(ValueError):
        cw.build_psi_star(2, 3, 1)
    assert cli.main(["preset", "razak", "--out", str(tmp_path)]) == 0
    assert cli.main(["lemmas", "--ids", "no-such-id", "--out", str(tmp_path)]) == 2
    assert cli.main(["groupoid", "--variant", "razak", "--stages", "0", "--out", str(tmp_path)]) == 2


@pytest.mark.criterion(8, "deterministic reports")
def test_criterion_8_determinism(tmp_path):
    for name in cli.PRESETS:
        outputs = []
        for run in ("a", "b"):
            out = tmp_path / run
            cli.main(["preset", name, "--seed", "0", "--out", str(out)])
            outputs.append((out / f"{cli.PRESETS[name].scenario}.json").read_bytes())
        assert outputs[0] == outputs[1], name
