"""Scenario runner: builds the finite objects, runs their checks and writes JSON reports.

Every run produces one report: the configuration, one record per check
(sorted by id) and a summary.  Reports contain no timestamps or paths, so
identical configurations give byte-identical files.

Exit status: 0 when every record passes, 1 when some record fails, 2 when
the configuration is invalid.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, blocks, cw, elliott, groupoids
from .intlin import FGAbGroup, IntMatrix, cokernel

SCHEMA_ID = "stagekit.report/1"
REPORT_DIR_ENV = "STAGEKIT_REPORT_DIR"
DEFAULT_REPORT_DIR = "stagekit-reports"

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """An invalid run configuration; reported before any computation starts."""


def _plain(value):
    """JSON-ready copy: numpy scalars to ints, tuples to lists, fractions to strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, FGAbGroup):
        return str(value)
    return value


@dataclass(frozen=True)
class Record:
    id: str
    anchor: str
    passed: bool
    witness: dict | None = None
    data: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.passed and self.witness is None:
            object.__setattr__(self, "witness", {"reason": "check failed"})

    def to_json(self) -> dict:
        return {"id": self.id, "anchor": self.anchor, "passed": bool(self.passed),
                "witness": _plain(self.witness), "data": _plain(self.data)}


@dataclass(frozen=True)
class RunConfig:
    """What to run.  Output location is deliberately not part of the report."""

    scenario: str
    variant: str | None = None
    stages: int | None = None
    seed: int | None = None
    dyadic_depth: int = 6
    lemma_ids: tuple[str, ...] | None = None
    instances: int = 200
    corrupt: bool = False
    block_file: str | None = None

    def to_json(self) -> dict:
        out = {"scenario": self.scenario, "seed": self.seed, "dyadic_depth": self.dyadic_depth}
        if self.variant is not None:
            out["variant"] = self.variant
            out["stages"] = self.stages
            out["corrupt"] = self.corrupt
        if self.lemma_ids is not None:
            out["lemma_ids"] = list(self.lemma_ids)
        if self.scenario in ("elliott", "elliott-roundtrip"):
            out["instances"] = self.instances
        if self.block_file is not None:
            out["block_file"] = Path(self.block_file).name
        return out


@dataclass
class RunReport:
    config: RunConfig
    records: list[Record]
    attachments: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def summary(self) -> dict:
        failed = sum(not r.passed for r in self.records)
        return {"total": len(self.records), "passed": len(self.records) - failed, "failed": failed}

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_ID,
            "tool_version": __version__,
            "config": self.config.to_json(),
            "records": [r.to_json() for r in sorted(self.records, key=lambda r: r.id)],
            "summary": self.summary(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def schema_path() -> Path:
    return Path(__file__).with_name("schema") / "report.schema.json"


def load_schema() -> dict:
    return json.loads(schema_path().read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# lemma suite: the space catalog and its maps

PSI_MAX, M_MAX, MOORE_MAX = 8, 12, 12


def _moore_x() -> list[Record]:
    out = []
    for N in range(2, MOORE_MAX + 1):
        X = cw.build_moore_X(N)
        got = [cw.cohomology(X, k) for k in range(4)]
        want = [FGAbGroup.Z(), FGAbGroup.trivial(), FGAbGroup.cyclic(N), FGAbGroup.trivial()]
        out.append(Record(f"moore-x/N={N:02d}", "cohomology of the Moore space X_N", got == want,
                          None if got == want else {"got": got, "want": want},
                          {"H": got, "K": list(cw.k_groups(X))}))
    return out


def _moore_y() -> list[Record]:
    out = []
    for N in range(2, MOORE_MAX + 1):
        Y = cw.build_moore_Y(N)
        got = [cw.cohomology(Y, k) for k in range(4)]
        want = [FGAbGroup.Z(), FGAbGroup.trivial(), FGAbGroup.trivial(), FGAbGroup.cyclic(N)]
        K = list(cw.k_groups(Y))
        ok = got == want and K == [FGAbGroup.Z(), FGAbGroup.cyclic(N)]
        out.append(Record(f"moore-y/N={N:02d}", "cohomology and K-theory of the suspension Y_N", ok,
                          None if ok else {"got": got, "want": want, "K": K}, {"H": got, "K": K}))
    return out


def _collapse() -> list[Record]:
    out = []
    for N in range(2, MOORE_MAX + 1):
        h = cw.induced_map(cw.build_omega_star(N), 3)
        onto = cokernel(h).is_trivial
        ok = onto and h.domain.canonical() == FGAbGroup.Z() and h.codomain.canonical() == FGAbGroup.cyclic(N)
        out.append(Record(f"collapse/N={N:02d}", "collapse Y_N → S³ is onto Z → Z/N on H³", ok,
                          None if ok else {"matrix": h.matrix.to_json()}, {"matrix": h.matrix.to_json()}))
    return out


def _psi_triples() -> list[tuple[int, int, int]]:
    return [(N, Np, m) for N in range(2, PSI_MAX + 1) for Np in range(2, PSI_MAX + 1)
            for m in range(1, M_MAX + 1) if (m * N) % Np == 0]


def _psi(suspended: bool) -> list[Record]:
    out = []
    k = 3 if suspended else 2
    for N, Np, m in _psi_triples():
        f = cw.build_suspended_psi_star(N, Np, m) if suspended else cw.build_psi_star(N, Np, m)
        h = cw.induced_map(f, k)
        ok = (h.domain.canonical() == FGAbGroup.cyclic(N) and h.codomain.canonical() == FGAbGroup.cyclic(Np)
              and h.matrix.to_json() == [[m % Np]])
        data = {"matrix": h.matrix.to_json()}
        if not suspended:
            # on H⁰ ⊕ H² the map is diag(1, m)
            h0 = cw.induced_map(f, 0)
            ok = ok and h0.matrix.to_json() == [[1]]
            data["H0"] = h0.matrix.to_json()
        rid = f"{'suspended-psi' if suspended else 'psi'}/N={N},N'={Np},m={m:02d}"
        anchor = ("degree-m map Y_N' → Y_N is multiplication by m on H³" if suspended
                  else "degree-m map X_N' → X_N is diag(1, m) on H⁰ ⊕ H²")
        out.append(Record(rid, anchor, ok, None if ok else {"got": h.matrix.to_json(), "m": m}, data))
    return out


def _wedge() -> list[Record]:
    out = []
    for N1 in range(2, 7):
        for N2 in range(N1, 7):
            W = cw.wedge([cw.build_moore_X(N1), cw.build_moore_X(N2)])
            got = cw.cohomology(W, 2)
            want = FGAbGroup.from_orders([N1, N2])
            K0, K1 = cw.k_groups(W)
            ok = got == want and K0 == FGAbGroup.Z() + want and K1.is_trivial
            out.append(Record(f"wedge/X{N1}vX{N2}", "wedge of Moore spaces adds reduced cohomology", ok,
                              None if ok else {"got": got, "want": want}, {"H2": got, "K0": K0, "K1": K1}))
    return out


def _bott() -> list[Record]:
    out = []
    S2 = cw.sphere(2)
    generator = cw.LineBundleClass(S2, (1,))
    for N in range(2, MOORE_MAX + 1):
        X = cw.build_moore_X(N)
        pinch = cw.CellularMap(X, S2, {0: IntMatrix.identity(1), 2: IntMatrix.identity(1)}, name=f"pinch[{N}]")
        pulled = generator.pullback(pinch)
        ok = pulled == cw.bott_class(X) and pulled.k0_class() == (1, 1)
        out.append(Record(f"bott-class/N={N:02d}", "Bott bundle pulled back to X_N has class (1, 1)", ok,
                          None if ok else {"k0_class": pulled.k0_class()}, {"k0_class": pulled.k0_class()}))
    return out


LEMMA_SUITE: dict[str, Callable[[], list[Record]]] = {
    "moore-x": _moore_x,
    "moore-y": _moore_y,
    "collapse": _collapse,
    "psi": lambda: _psi(False),
    "suspended-psi": lambda: _psi(True),
    "wedge": _wedge,
    "bott-class": _bott,
}


def run_lemma_suite(ids: Sequence[str] | None = None, config: RunConfig | None = None) -> RunReport:
    """Catalog checks for the selected ids (all when ``ids`` is ``None``)."""
    ids = tuple(LEMMA_SUITE) if ids is None else tuple(ids)
    unknown = [i for i in ids if i not in LEMMA_SUITE]
    if unknown:
        raise ConfigError(f"unknown lemma ids {unknown}; known: {sorted(LEMMA_SUITE)}")
    records: list[Record] = []
    for i in ids:
        records += LEMMA_SUITE[i]()
    return RunReport(config or RunConfig("lemmas", lemma_ids=ids), records)


# ---------------------------------------------------------------------------
# groupoid towers

EXPECTED_UNITAL = {"jiang-su": True, "razak": False, "z0": False}


def _variant_block(params: groupoids.StageParams) -> blocks.BlockAlgebra:
    v = params.values[0]
    if params.variant == "jiang-su":
        return blocks.jiang_su_block(*v)
    if params.variant == "razak":
        return blocks.razak_block(*v)
    return blocks.z0_block(v[0], v[1])


def run_groupoid_scenario(config: RunConfig) -> RunReport:
    """Build a tower, run every hypothesis check and report the unit-space graphs."""
    if config.variant not in groupoids.VARIANTS:
        raise ConfigError(f"unknown variant {config.variant!r}")
    if config.stages is None or config.stages < 1:
        raise ConfigError("--stages must be at least 1")
    if config.dyadic_depth < 0:
        raise ConfigError("--dyadic-depth must be non-negative")
    params = groupoids.generate_params(config.variant, config.stages, seed=config.seed)
    records: list[Record] = []
    attachments: dict[str, str] = {}

    for name, ok, detail in groupoids.check_params(params):
        records.append(Record(f"params/{name}", "stage recursion and divisibility", ok,
                              None if ok else {"detail": detail}, {"detail": detail}))

    A = _variant_block(params)
    unital = blocks.check_unital(A)
    want = EXPECTED_UNITAL[params.variant]
    K0, K1 = blocks.k_theory(A)
    records.append(Record("block/unital", "boundary maps fill E exactly", unital == want,
                          None if unital == want else {"unital": unital, "expected": want},
                          {"block": A.name, "unital": unital, "K0": K0, "K1": K1}))

    graphs = [groupoids.unit_space(groupoids.build_stage(params, 1))]
    for n in range(1, params.stages):
        cm = groupoids.build_connecting(params, n)
        mid = f"map-{n + 1}-{n}"
        report = groupoids.check_morphism_hypotheses(cm, config.dyadic_depth)
        for c in report.checks:
            data = dict(c.data)
            if c.name == "descent":
                data["map"] = cm.to_json()
            records.append(Record(f"{mid}/{c.name}", f"connecting map is {c.name.replace('_', ' ')}",
                                  c.passed, c.witness, data))
        h = groupoids.h1_transfer(cm)
        hdata = h.to_json()
        if h.matrix is not None and h.matrix.rows * h.matrix.cols <= 400:
            hdata["matrix"] = h.matrix.to_json()
        records.append(Record(f"{mid}/h1-transfer", "transfer on H¹ is injective", h.injective,
                              None if h.injective else {"rank": h.rank, "source_b1": h.source_b1}, hdata))
        graphs.append(groupoids.unit_space(cm.source, cm))

    for g in graphs:
        ok = g.b1 == g.E - g.V + g.b0 and g.b0 >= 1
        if params.variant == "jiang-su":
            ok = ok and g.b0 == 1
        records.append(Record(f"stage-{g.stage}/unit-space", "unit space as a graph; b1 = E - V + b0", ok,
                              None if ok else {"b0": g.b0}, g.to_json()))
        if g.edges is not None:
            attachments[f"{config.variant}-stage-{g.stage}.dot"] = g.to_dot()

    if params.stages > 1:
        tower = groupoids.tower_truncate(params, 1, params.stages - 1)
        audit = groupoids.refinement_audit(tower)
        records.append(Record("tower/refinement", "glued ends stay glued under composite maps", audit["ok"],
                              None if audit["ok"] else {"levels": audit["levels"]},
                              {"levels": audit["levels"], "twist": tower.twist, "divisor": tower.divisor}))
    records.append(Record("tower/betti", "Betti numbers of the unit spaces", True, None, {
        "b0": [g.b0 for g in graphs], "b1": [g.b1 for g in graphs],
        "strands": [g.E for g in graphs], "params": params.to_json(),
    }))
    return RunReport(config, records, attachments)


def run_negative_controls(config: RunConfig) -> RunReport:
    """Built-in failures: a corrupted gluing (descent must fail) and an impossible map."""
    params = groupoids.generate_params("jiang-su", 2, seed=config.seed)
    overrides = groupoids.corrupt_gluing(params, 1)
    cm = groupoids.build_connecting(params, 1, overrides)
    records = []
    for c in groupoids.check_morphism_hypotheses(cm, config.dyadic_depth).checks:
        records.append(Record(f"corrupted-gluing/{c.name}", f"corrupted gluing: {c.name.replace('_', ' ')}",
                              c.passed, c.witness,
                              {**c.data, "swapped_ends": sorted([s, t] for s, t in overrides)}))
    try:
        cw.build_psi_star(2, 3, 1)
        records.append(Record("psi-divisibility/rejected", "degree map needs N' | m·N", False,
                              {"triple": [2, 3, 1], "reason": "accepted"}, {}))
    except ValueError as err:
        records.append(Record("psi-divisibility/rejected", "degree map needs N' | m·N", True, None,
                              {"triple": [2, 3, 1], "error": str(err)}))
    return RunReport(config, records)


# ---------------------------------------------------------------------------
# building blocks


def run_blocks_scenario(config: RunConfig) -> RunReport:
    records = []
    if config.block_file:
        try:
            obj = json.loads(Path(config.block_file).read_text(encoding="utf-8"))
            A = blocks.BlockAlgebra.from_json(obj)
        except (OSError, ValueError, KeyError) as err:
            raise ConfigError(f"cannot read block description: {err}") from err
        K0, K1 = blocks.k_theory(A)
        audit = blocks.rank_audit(A)
        records.append(Record(f"block/{A.name}", "K-theory from the index map", audit["ok"],
                              None if audit["ok"] else audit,
                              {"K0": K0, "K1": K1, "unital": blocks.check_unital(A), "audit": audit}))
        return RunReport(config, records)
    Z, zero = FGAbGroup.Z(), FGAbGroup.trivial()
    from math import gcd
    for p in range(1, 51):
        for q in range(p, 51):
            if gcd(p, q) != 1:
                continue
            A = blocks.jiang_su_block(p, q)
            K = blocks.k_theory(A)
            ok = K == (Z, zero) and blocks.check_unital(A) and blocks.rank_audit(A)["ok"]
            records.append(Record(f"dimension-drop/p={p:02d},q={q:02d}", "coprime dimension-drop block has K = (Z, 0)",
                                  ok, None if ok else {"K": K}, {"K0": K[0], "K1": K[1]}))
    for a in range(1, 11):
        for b in (1, 2, 3):
            A = blocks.razak_block(a, b)
            K = blocks.k_theory(A)
            ok = K == (zero, zero) and not blocks.check_unital(A)
            records.append(Record(f"razak/a={a:02d},b={b}", "Razak block has K = (0, 0) and is not unital",
                                  ok, None if ok else {"K": K}, {"K0": K[0], "K1": K[1]}))
    return RunReport(config, records)


# ---------------------------------------------------------------------------
# Elliott stage data


def _elliott_controls() -> list[Record]:
    out = []
    src, dst = elliott.StageData(1, (2,)), elliott.StageData(1, (4,))
    good = elliott.ConnectingData.from_lists(src, dst, [[3]], [[2]], [[1]])
    rep = elliott.validate_constraints(src, dst, good)
    bp = elliott.build_psi_blueprint(src, dst, good)
    on_K0, _ = elliott.induced_K(bp)
    kinds = [s.kind for s in bp.summands if s.side == "K0"]
    ok = rep.passed and on_K0.matrix == good.gamma(src, dst).matrix and bp.rank_audit()["ok"]
    out.append(Record("control/multiplicity-pass", "γ̂ = 3 with one torsion summand meets the multiplicity bound",
                      ok, None if ok else {"report": rep.to_json()},
                      {"summands": kinds, "on_K0": on_K0.matrix.to_json()}))
    bad = elliott.ConnectingData.from_lists(src, dst, [[1]], [[2]], [[1]])
    rep = elliott.validate_constraints(src, dst, bad)
    try:
        elliott.build_psi_blueprint(src, dst, bad)
        raised = False
    except elliott.ConstraintError:
        raised = True
    ok = not rep["k0_multiplicity"].passed and raised
    out.append(Record("control/multiplicity-fail", "γ̂ = 1 with one torsion summand is rejected", ok,
                      None if ok else {"report": rep.to_json(), "raised": raised},
                      {"detail": rep["k0_multiplicity"].detail}))
    plain_s, plain_d = elliott.StageData(2), elliott.StageData(2)
    for name, gh, want in (("positive", [[2, 1], [1, 3]], True), ("zero-entry", [[2, 0], [1, 3]], False)):
        rep = elliott.validate_constraints(plain_s, plain_d, elliott.ConnectingData.from_lists(plain_s, plain_d, gh))
        names = sorted(c.name for c in rep.checks)
        ok = rep.passed == want and rep["gamma_hat_positive"].passed == want
        out.append(Record(f"control/no-torsion-{name}", "without torsion only positivity of γ̂ gates", ok,
                          None if ok else {"report": rep.to_json()}, {"checks": names}))
    thr = elliott.ConnectingData.from_lists(plain_s, plain_d, [[5, 4], [4, 5]], Gamma=5)
    rep = elliott.validate_constraints(plain_s, plain_d, thr)
    ok = not rep["gamma_hat_threshold"].passed
    out.append(Record("control/threshold", "entries below the threshold Γ are reported", ok,
                      None if ok else {"report": rep.to_json()}, {"detail": rep["gamma_hat_threshold"].detail}))
    return out


def run_elliott_scenario(config: RunConfig) -> RunReport:
    if config.instances < 0:
        raise ConfigError("--instances must be non-negative")
    records = _elliott_controls()
    seed = 0 if config.seed is None else config.seed
    for i in range(config.instances):
        rng = random.Random(f"{seed}:{i}")
        src, dst, c = elliott.random_instance(rng)
        rep = elliott.validate_constraints(src, dst, c)
        bp = elliott.build_psi_blueprint(src, dst, c)
        on_K0, on_K1 = elliott.induced_K(bp)
        g, x = c.gamma(src, dst), c.chi(src, dst)
        ok = rep.passed and on_K0.matrix == g.matrix and on_K1.matrix == x.matrix and bp.rank_audit()["ok"]
        witness = None if ok else {"gamma": g.matrix.to_json(), "on_K0": on_K0.matrix.to_json(),
                                   "chi": x.matrix.to_json(), "on_K1": on_K1.matrix.to_json()}
        records.append(Record(f"roundtrip/{i:04d}", "realizing maps induce γ on K₀ and χ on K₁", ok, witness, {
            "H": [str(src.H.canonical()), str(dst.H.canonical())],
            "K": [str(src.K.canonical()), str(dst.K.canonical())],
            "summands": len(bp.summands), "max_dim": bp.max_dim,
        }))
    return RunReport(config, records)


# ---------------------------------------------------------------------------
# presets and command line

PRESETS: dict[str, RunConfig] = {
    "jiang-su": RunConfig("jiang-su", variant="jiang-su", stages=4),
    "razak": RunConfig("razak", variant="razak", stages=3),
    "z0": RunConfig("z0", variant="z0", stages=3),
    "lemmas-s3": RunConfig("lemmas-s3", lemma_ids=tuple(LEMMA_SUITE)),
    "elliott-roundtrip": RunConfig("elliott-roundtrip", seed=0, instances=200),
    "negative-controls": RunConfig("negative-controls"),
}


def run(config: RunConfig) -> RunReport:
    if config.scenario in ("lemmas", "lemmas-s3"):
        return run_lemma_suite(config.lemma_ids, config)
    if config.scenario in ("groupoid", "jiang-su", "razak", "z0"):
        return run_groupoid_scenario(config)
    if config.scenario == "blocks":
        return run_blocks_scenario(config)
    if config.scenario in ("elliott", "elliott-roundtrip"):
        return run_elliott_scenario(config)
    if config.scenario == "negative-controls":
        return run_negative_controls(config)
    raise ConfigError(f"unknown scenario {config.scenario!r}")


def report_dir(cli_value: str | None) -> Path:
    return Path(cli_value or os.environ.get(REPORT_DIR_ENV) or DEFAULT_REPORT_DIR)


def write_report(report: RunReport, out_dir: Path, fmt: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{report.config.scenario}.json"
    path.write_text(report.dumps(), encoding="utf-8")
    if fmt == "dot":
        for name, text in sorted(report.attachments.items()):
            (out_dir / name).write_text(text, encoding="utf-8")
    return path


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="seed for shuffled gluings and random instances")
    p.add_argument("--dyadic-depth", type=int, default=6, help="depth of the dyadic grid for interval checks")
    p.add_argument("--out", default=None, help=f"report directory (default: ${REPORT_DIR_ENV} or ./{DEFAULT_REPORT_DIR})")
    p.add_argument("--format", choices=("json", "dot"), default="json",
                   help="json writes the report; dot also writes unit-space graphs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stagekit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"stagekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lemmas", help="cohomology and induced maps of the space catalog")
    p.add_argument("--ids", default=None,
                   help=f"comma-separated subset of {','.join(LEMMA_SUITE)} (empty string selects nothing)")
    _add_common(p)

    p = sub.add_parser("groupoid", help="build a groupoid tower and check its connecting maps")
    p.add_argument("--variant", choices=groupoids.VARIANTS, required=True)
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--corrupt", action="store_true", help="corrupt the gluing of stage 2 (negative control)")
    _add_common(p)

    p = sub.add_parser("blocks", help="K-theory of building blocks")
    p.add_argument("--block", default=None, help="JSON block description; default runs the built-in sweep")
    _add_common(p)

    p = sub.add_parser("elliott", help="random connecting steps and their realizations")
    p.add_argument("--instances", type=int, default=200)
    _add_common(p)

    p = sub.add_parser("preset", help="run a named acceptance scenario")
    p.add_argument("name", choices=sorted(PRESETS))
    _add_common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    common = {"seed": args.seed, "dyadic_depth": args.dyadic_depth}
    if args.dyadic_depth < 0:
        raise ConfigError("--dyadic-depth must be non-negative")
    if args.command == "lemmas":
        ids = None if args.ids is None else tuple(i.strip() for i in args.ids.split(",") if i.strip())
        unknown = [i for i in ids or () if i not in LEMMA_SUITE]
        if unknown:
            raise ConfigError(f"unknown lemma ids {unknown}")
        return RunConfig("lemmas", lemma_ids=ids if ids is not None else tuple(LEMMA_SUITE), **common)
    if args.command == "groupoid":
        if args.stages < 1:
            raise ConfigError("--stages must be at least 1")
        if args.corrupt:
            if args.stages < 2:
                raise ConfigError("--corrupt needs at least two stages")
        return RunConfig("groupoid", variant=args.variant, stages=args.stages, corrupt=args.corrupt, **common)
    if args.command == "blocks":
        return RunConfig("blocks", block_file=args.block, **common)
    if args.command == "elliott":
        if args.instances < 0:
            raise ConfigError("--instances must be non-negative")
        return RunConfig("elliott", instances=args.instances, **common)
    base = PRESETS[args.name]
    seed = args.seed if args.seed is not None else base.seed
    return RunConfig(base.scenario, base.variant, base.stages, seed, args.dyadic_depth,
                     base.lemma_ids, base.instances, base.corrupt, base.block_file)


def _run_corrupted(config: RunConfig) -> RunReport:
    report = run_groupoid_scenario(config)
    params = groupoids.generate_params(config.variant, config.stages, seed=config.seed)
    cm = groupoids.build_connecting(params, 1, groupoids.corrupt_gluing(params, 1))
    report.records = [r for r in report.records if not r.id.startswith("map-2-1/")]
    for c in groupoids.check_morphism_hypotheses(cm, config.dyadic_depth).checks:
        report.records.append(Record(f"map-2-1/{c.name}", f"corrupted gluing: {c.name.replace('_', ' ')}",
                                     c.passed, c.witness, c.data))
    return report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        config = config_from_args(args)
        report = _run_corrupted(config) if config.corrupt else run(config)
    except (ConfigError, ValueError) as err:
        print(f"stagekit: invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    path = write_report(report, report_dir(args.out), args.format)
    s = report.summary()
    print(f"{config.scenario}: {s['passed']}/{s['total']} checks passed -> {path}")
    for r in sorted(report.records, key=lambda r: r.id):
        if not r.passed:
            print(f"  FAIL {r.id}: {json.dumps(_plain(r.witness), sort_keys=True, ensure_ascii=False)}")
    return EXIT_OK if report.passed else EXIT_FAILED
