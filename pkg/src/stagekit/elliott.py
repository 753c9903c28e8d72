"""Stage data for one connecting step and its realization by cellular maps.

A stage carries the ordered group ``H_n`` (free summands indexed by ``i``,
the distinguished one first, followed by the torsion ``⊕_k Z/N^k`` attached
to it) and the group ``K_n`` (free summands followed by torsion
``⊕_k Z/M^k``).  A connecting step is given by block matrices

* ``gamma_hat`` (free → free), ``tau`` (torsion → torsion), ``t`` (free → torsion)
  making up ``γ : H_n → H_{n+1}``;
* ``chi_hat``, ``chi_tau``, ``chi_t`` making up ``χ : K_n → K_{n+1}`` the same way.

:func:`build_psi_blueprint` writes down a diagonal homomorphism between the
commutative building blocks as a list of summands, each a cellular map or a
line bundle, and :func:`induced_K` adds up their effect on K-theory.  The
round trip ``induced_K(build_psi_blueprint(...)) == (γ, χ)`` is the central
check of this module.

Coordinates throughout:

* ``K⁰`` side: ``X_n`` is the wedge of the Moore spaces ``X_{N^k}`` (or a
  point when there is no torsion) for the distinguished summand, and a point
  for every other free summand.
* ``K¹`` side: ``Y_n`` is the wedge of one ``S³`` per free summand of ``K_n``
  followed by the suspended Moore spaces ``Y_{M^k}``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import gcd
from typing import Sequence

from . import cw
from .intlin import CyclicSum, GroupHom, IntMatrix, reassemble_gamma

__all__ = [
    "StageData",
    "ConnectingData",
    "ConstraintCheck",
    "ConstraintReport",
    "ConstraintError",
    "BlueprintSummand",
    "PsiBlueprint",
    "validate_constraints",
    "build_psi_blueprint",
    "induced_K",
    "in_positive_cone",
    "meets_positive_cone",
    "random_instance",
]


class ConstraintError(ValueError):
    """Raised when a blueprint is requested for data failing a gating constraint."""


def _as_matrix(m, rows: int, cols: int, name: str) -> IntMatrix:
    if isinstance(m, IntMatrix):
        M = m
    else:
        M = IntMatrix.from_rows([list(r) for r in m], cols) if rows else IntMatrix.zeros(0, cols)
    if M.shape != (rows, cols):
        raise ValueError(f"{name} has shape {M.shape}, expected {(rows, cols)}")
    return M


@dataclass(frozen=True)
class StageData:
    """The groups at one stage.

    ``free_count`` counts the free summands of ``H_n`` (at least one, the
    distinguished summand being index 0); ``torsion`` lists the orders
    ``N^k`` of the cyclic groups in ``Tor(H_n)``.  ``k_free`` and
    ``k_torsion`` describe ``K_n`` the same way.  ``order_unit`` is an
    optional element of ``H_n`` and ``G_generators`` optional generators of
    the subgroup ``G_n``; both are taken as given.
    """

    free_count: int
    torsion: tuple[int, ...] = ()
    k_free: int = 0
    k_torsion: tuple[int, ...] = ()
    order_unit: tuple[int, ...] | None = None
    G_generators: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "torsion", tuple(self.torsion))
        object.__setattr__(self, "k_torsion", tuple(self.k_torsion))
        object.__setattr__(self, "G_generators", tuple(tuple(g) for g in self.G_generators))
        if self.free_count < 1:
            raise ValueError("H_n needs at least the distinguished free summand")
        if self.k_free < 0:
            raise ValueError("k_free must be non-negative")
        for d in self.torsion + self.k_torsion:
            if d < 2:
                raise ValueError(f"torsion orders must be at least 2, got {d}")
        if self.order_unit is not None:
            u = tuple(self.order_unit)
            if len(u) != len(self.H):
                raise ValueError("order unit has the wrong number of coordinates")
            object.__setattr__(self, "order_unit", self.H.reduce(u))
        for g in self.G_generators:
            if len(g) != len(self.H):
                raise ValueError("G generator has the wrong number of coordinates")

    @property
    def H(self) -> CyclicSum:
        return CyclicSum((0,) * self.free_count + self.torsion)

    @property
    def K(self) -> CyclicSum:
        return CyclicSum((0,) * self.k_free + self.k_torsion)

    @property
    def split(self) -> tuple[int, tuple[int, ...]]:
        return (self.free_count, self.torsion)

    @property
    def k_split(self) -> tuple[int, tuple[int, ...]]:
        return (self.k_free, self.k_torsion)

    @property
    def n_torsion(self) -> int:
        """``#₀(k)``: the number of cyclic summands of ``Tor(H_n)``."""
        return len(self.torsion)

    @property
    def n_k_torsion(self) -> int:
        """``#₁(k)``: the number of cyclic summands of ``Tor(K_n)``."""
        return len(self.k_torsion)

    @property
    def n_k_summands(self) -> int:
        """``#₁(i)``: the torsion part counts as one summand, plus one per free summand."""
        return self.k_free + 1

    def to_json(self) -> dict:
        return {
            "free_count": self.free_count,
            "torsion": list(self.torsion),
            "k_free": self.k_free,
            "k_torsion": list(self.k_torsion),
            "order_unit": None if self.order_unit is None else list(self.order_unit),
            "G_generators": [list(g) for g in self.G_generators],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StageData":
        u = obj.get("order_unit")
        return cls(
            int(obj["free_count"]),
            tuple(obj.get("torsion", ())),
            int(obj.get("k_free", 0)),
            tuple(obj.get("k_torsion", ())),
            None if u is None else tuple(u),
            tuple(tuple(g) for g in obj.get("G_generators", ())),
        )


def _normalize_entries(M: IntMatrix, orders: Sequence[int]) -> IntMatrix:
    """Reduce row ``l`` mod ``orders[l]`` into ``1..orders[l]`` (so zero becomes the order)."""
    rows = [[(x % o) or o for x in M.row(l)] for l, o in enumerate(orders)]
    return IntMatrix.from_rows(rows, M.cols) if rows else M


@dataclass(frozen=True)
class ConnectingData:
    """Block matrices of ``γ = γ̂ + τ + t`` and ``χ = χ̂ + χ_τ + χ_t``."""

    gamma_hat: IntMatrix
    tau: IntMatrix
    t: IntMatrix
    chi_hat: IntMatrix
    chi_tau: IntMatrix
    chi_t: IntMatrix
    Gamma: int | None = None

    @classmethod
    def from_lists(cls, src: StageData, dst: StageData, gamma_hat, tau=None, t=None,
                   chi_hat=None, chi_tau=None, chi_t=None, Gamma: int | None = None) -> "ConnectingData":
        F, Fp = src.free_count, dst.free_count
        T, Tp = src.n_torsion, dst.n_torsion
        K, Kp = src.k_free, dst.k_free
        M, Mp = src.n_k_torsion, dst.n_k_torsion

        def mat(m, r, c, name):
            return IntMatrix.zeros(r, c) if m is None else _as_matrix(m, r, c, name)

        return cls(
            mat(gamma_hat, Fp, F, "gamma_hat"),
            mat(tau, Tp, T, "tau"),
            mat(t, Tp, F, "t"),
            mat(chi_hat, Kp, K, "chi_hat"),
            mat(chi_tau, Mp, M, "chi_tau"),
            mat(chi_t, Mp, K, "chi_t"),
            Gamma,
        )

    @classmethod
    def from_homs(cls, src: StageData, dst: StageData, gamma: GroupHom, chi: GroupHom,
                  Gamma: int | None = None) -> "ConnectingData":
        from .intlin import decompose_gamma

        g_hat, tau, t = decompose_gamma(gamma, src.split, dst.split)
        c_hat, c_tau, c_t = decompose_gamma(chi, src.k_split, dst.k_split)
        return cls(g_hat, tau, t, c_hat, c_tau, c_t, Gamma)

    def check_shapes(self, src: StageData, dst: StageData) -> None:
        expected = {
            "gamma_hat": (dst.free_count, src.free_count),
            "tau": (dst.n_torsion, src.n_torsion),
            "t": (dst.n_torsion, src.free_count),
            "chi_hat": (dst.k_free, src.k_free),
            "chi_tau": (dst.n_k_torsion, src.n_k_torsion),
            "chi_t": (dst.n_k_torsion, src.k_free),
        }
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ValueError(f"{name} has shape {got}, expected {shape}")

    def normalized(self, dst: StageData) -> "ConnectingData":
        """Torsion-valued entries moved into ``1..N``; the homomorphisms are unchanged."""
        return replace(
            self,
            tau=_normalize_entries(self.tau, dst.torsion),
            t=_normalize_entries(self.t, dst.torsion),
            chi_tau=_normalize_entries(self.chi_tau, dst.k_torsion),
            chi_t=_normalize_entries(self.chi_t, dst.k_torsion),
        )

    def gamma(self, src: StageData, dst: StageData) -> GroupHom:
        return reassemble_gamma(self.gamma_hat, self.tau, self.t, src.split, dst.split)

    def chi(self, src: StageData, dst: StageData) -> GroupHom:
        return reassemble_gamma(self.chi_hat, self.chi_tau, self.chi_t, src.k_split, dst.k_split)

    def to_json(self) -> dict:
        out = {name: getattr(self, name).to_rows()
               for name in ("gamma_hat", "tau", "t", "chi_hat", "chi_tau", "chi_t")}
        out["Gamma"] = self.Gamma
        return out

    @classmethod
    def from_json(cls, src: StageData, dst: StageData, obj: dict) -> "ConnectingData":
        return cls.from_lists(src, dst, obj["gamma_hat"], obj.get("tau"), obj.get("t"),
                              obj.get("chi_hat"), obj.get("chi_tau"), obj.get("chi_t"), obj.get("Gamma"))


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    detail: str
    gating: bool = True

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "gating": self.gating}


@dataclass(frozen=True)
class ConstraintReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def failures(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if c.gating and not c.passed]

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.checks]


def in_positive_cone(stage: StageData, x: Sequence[int]) -> bool:
    """Membership in ``H_n^+``.

    The distinguished component ``Z ⊕ Tor`` is positive when it is zero or
    its free coordinate is strictly positive; every other free coordinate
    has to be non-negative.
    """
    x = stage.H.reduce(tuple(x))
    F = stage.free_count
    head, rest, tors = x[0], x[1:F], x[F:]
    if any(v < 0 for v in rest):
        return False
    return head > 0 or (head == 0 and not any(tors))


def _rational_rank(rows: list[list[Fraction]]) -> int:
    rows = [r[:] for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _solve_square(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    n = len(A)
    M = [row[:] + [bi] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c] / M[c][c]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def meets_positive_cone(stage: StageData, generators: Sequence[Sequence[int]] | None = None) -> bool:
    """Whether the subgroup generated by ``generators`` meets ``H_n^+ \\ {0}``.

    An element of ``H_n^+`` other than zero has a non-negative, nonzero free
    part, or is torsion with a zero distinguished coordinate, which the
    cone excludes.  Since torsion elements never lie in the cone, the
    question is whether the rational span of the free parts contains a
    nonzero vector with non-negative entries.  That is decided exactly by
    checking the vertices of ``{v in span : v >= 0, sum(v) = 1}``.
    """
    gens = stage.G_generators if generators is None else tuple(tuple(g) for g in generators)
    F = stage.free_count
    vecs = [[Fraction(x) for x in g[:F]] for g in gens]
    vecs = [v for v in vecs if any(v)]
    if not vecs:
        return False
    # basis of the span
    basis: list[list[Fraction]] = []
    for v in vecs:
        if _rational_rank(basis + [v]) > len(basis):
            basis.append(v)
    d = len(basis)
    # v = Σ c_j basis_j ; pick d-1 coordinates forced to zero plus Σ v = 1
    for zeros in itertools.combinations(range(F), d - 1):
        A = [[basis[j][r] for j in range(d)] for r in zeros]
        A.append([sum(basis[j]) for j in range(d)])
        b = [Fraction(0)] * (d - 1) + [Fraction(1)]
        c = _solve_square(A, b)
        if c is None:
            continue
        v = [sum(c[j] * basis[j][r] for j in range(d)) for r in range(F)]
        if all(x >= 0 for x in v):
            return True
    return False


def validate_constraints(src: StageData, dst: StageData, c: ConnectingData) -> ConstraintReport:
    """Check the connecting data against the constraints a realization needs.

    Only shape mismatches raise; everything else becomes a report entry.
    The rank equation for the distinguished summand is reported for
    information and does not gate.
    """
    c.check_shapes(src, dst)
    checks: list[ConstraintCheck] = []
    gh = c.gamma_hat
    entries = gh.data
    checks.append(ConstraintCheck(
        "gamma_hat_positive", all(x > 0 for x in entries),
        f"min entry {min(entries)}" if entries else "no entries"))
    if c.Gamma is not None:
        checks.append(ConstraintCheck(
            "gamma_hat_threshold", all(x >= c.Gamma for x in entries),
            f"min entry {min(entries) if entries else None} vs threshold {c.Gamma}"))
    g00 = gh[0, 0]
    need0 = src.n_torsion + 1
    checks.append(ConstraintCheck(
        "k0_multiplicity", g00 >= need0, f"gamma_hat[0,0] = {g00}, needs >= #0(k)+1 = {need0}"))
    need1 = src.n_k_torsion + src.n_k_summands - 1
    checks.append(ConstraintCheck(
        "k1_multiplicity", g00 >= need1, f"gamma_hat[0,0] = {g00}, needs >= #1(k)+#1(i)-1 = {need1}"))

    bad = []
    for l, Np in enumerate(dst.torsion):
        for k, N in enumerate(src.torsion):
            if (c.tau[l, k] * N) % Np:
                bad.append(("tau", l, k))
    for l, Mp in enumerate(dst.k_torsion):
        for k, M in enumerate(src.k_torsion):
            if (c.chi_tau[l, k] * M) % Mp:
                bad.append(("chi_tau", l, k))
    checks.append(ConstraintCheck(
        "torsion_maps_well_defined", not bad,
        "all entries respect the torsion orders" if not bad else f"ill-defined entries {bad}"))

    norm = c.normalized(dst)
    pos = all(x > 0 for M in (norm.tau, norm.t, norm.chi_tau, norm.chi_t) for x in M.data)
    checks.append(ConstraintCheck("torsion_entries_positive", pos, "after reduction into 1..N"))

    if src.order_unit is not None:
        checks.append(ConstraintCheck(
            "order_unit_positive", in_positive_cone(src, src.order_unit), f"u_n = {list(src.order_unit)}"))
    if src.order_unit is not None and dst.order_unit is not None and not bad:
        image = c.gamma(src, dst)(src.order_unit)
        checks.append(ConstraintCheck(
            "order_unit_mapped", image == dst.order_unit,
            f"gamma(u_n) = {list(image)}, u_(n+1) = {list(dst.order_unit)}"))
        lhs, rhs = dst.order_unit[0], g00 * src.order_unit[0]
        checks.append(ConstraintCheck(
            "rank_equation", lhs == rhs,
            f"[n+1,0] = {lhs}, gamma_hat[0,0]*[n,0] = {rhs}", gating=False))
    for name, stage in (("G_meets_cone_src", src), ("G_meets_cone_dst", dst)):
        if stage.G_generators:
            hit = meets_positive_cone(stage)
            checks.append(ConstraintCheck(name, not hit, "G ∩ H^+ = {0}" if not hit else "G meets H^+"))
    return ConstraintReport(tuple(checks))


# ---------------------------------------------------------------------------
# blueprints


@dataclass(frozen=True)
class BlueprintSummand:
    """One diagonal summand of the realizing homomorphism.

    ``side`` is ``"K0"`` or ``"K1"``; ``block`` is ``(j, i)``, the target and
    source free summand.  Exactly one of ``cmap`` (a map from the target
    space to the source space, whose dual is the summand) and ``bundle`` (a
    line bundle over the target space, the image of the unit) is set.
    """

    side: str
    block: tuple[int, int]
    kind: str
    multiplicity: int = 1
    cmap: cw.CellularMap | None = field(default=None, compare=False)
    bundle: cw.LineBundleClass | None = field(default=None, compare=False)
    label: str = ""

    def to_json(self) -> dict:
        out = {"side": self.side, "block": list(self.block), "kind": self.kind,
               "multiplicity": self.multiplicity, "label": self.label}
        if self.cmap is not None:
            out["map"] = self.cmap.name
        if self.bundle is not None:
            out["chern"] = list(self.bundle.chern)
        return out


@dataclass(frozen=True)
class PsiBlueprint:
    src: StageData
    dst: StageData
    data: ConnectingData
    x_src: tuple[cw.CWComplex, ...]
    x_dst: tuple[cw.CWComplex, ...]
    y_src: cw.CWComplex
    y_dst: cw.CWComplex
    k1_degree: int
    summands: tuple[BlueprintSummand, ...]

    def ranks(self) -> dict[tuple[str, int, int], int]:
        out: dict[tuple[str, int, int], int] = {}
        for s in self.summands:
            key = (s.side, *s.block)
            out[key] = out.get(key, 0) + s.multiplicity
        return out

    def rank_audit(self) -> dict:
        """Summand ranks against the diagonal ``γ̂`` entries."""
        ranks = self.ranks()
        gh = self.data.gamma_hat
        rows = []
        ok = True
        for j in range(gh.rows):
            for i in range(gh.cols):
                got = ranks.get(("K0", j, i), 0)
                rows.append({"side": "K0", "block": [j, i], "rank": got, "expected": gh[j, i]})
                ok &= got == gh[j, i]
        got = ranks.get(("K1", 0, 0), 0)
        rows.append({"side": "K1", "block": [0, 0], "rank": got, "expected": gh[0, 0]})
        ok &= got == gh[0, 0]
        return {"ok": ok, "blocks": rows}

    @property
    def max_dim(self) -> int:
        return max(X.dim for X in (*self.x_src, *self.x_dst, self.y_src, self.y_dst))

    def to_json(self) -> dict:
        return {
            "k1_degree": self.k1_degree,
            "summands": [s.to_json() for s in self.summands],
            "rank_audit": self.rank_audit(),
        }


def _x_space(stage: StageData) -> cw.CWComplex:
    return cw.wedge_or_point([cw.build_moore_X(N) for N in stage.torsion])


def _y_space(stage: StageData, degree: int) -> cw.CWComplex:
    parts = [cw.sphere(degree)] * stage.k_free + [cw.build_moore_Y(M) for M in stage.k_torsion]
    return cw.wedge_or_point(parts)


def _twisted_bott(X: cw.CWComplex, t_col: Sequence[int]) -> cw.LineBundleClass:
    """Line bundle whose Chern class has coordinate ``t_l`` on the ``l``-th Moore summand.

    It is the pullback of the generating bundle along the wedge of the
    self-maps ``Ψ_{t_l}`` of the summands.
    """
    maps = []
    for part, m in zip(X.parts, t_col):
        if part.name == "pt":
            maps.append(cw.identity_map(part))
        else:
            N = int(part.name[1:])
            maps.append(cw.build_psi_star(N, N, m))
    f = cw.wedge_of_maps(maps)
    # wedge_of_maps builds a fresh wedge equal to X cell for cell
    return cw.bott_class(f.target).pullback(f)


def build_psi_blueprint(src: StageData, dst: StageData, c: ConnectingData,
                        circle_shortcut: bool | None = None) -> PsiBlueprint:
    """The diagonal homomorphism realizing ``γ`` on ``K₀`` and ``χ`` on ``K₁``.

    ``circle_shortcut`` builds the K¹ side from circles instead of
    3-spheres; by default it is used exactly when both ``K`` groups are
    torsion free.
    """
    report = validate_constraints(src, dst, c)
    if not report["torsion_maps_well_defined"].passed:
        raise ConstraintError("inconsistent torsion data: " + report["torsion_maps_well_defined"].detail)
    if not report.passed:
        raise ConstraintError("; ".join(f"{f.name}: {f.detail}" for f in report.failures()))
    c = c.normalized(dst)
    if circle_shortcut is None:
        circle_shortcut = not src.k_torsion and not dst.k_torsion
    elif circle_shortcut and (src.k_torsion or dst.k_torsion):
        raise ValueError("the circle shortcut needs torsion-free K groups")
    deg = 1 if circle_shortcut else 3

    Xi = _x_space(src)
    Xj = _x_space(dst)
    pt = cw.point()
    x_src = (Xi,) + (pt,) * (src.free_count - 1)
    x_dst = (Xj,) + (pt,) * (dst.free_count - 1)
    summands: list[BlueprintSummand] = []
    gh = c.gamma_hat

    # K0 side ------------------------------------------------------------
    for j in range(dst.free_count):
        for i in range(src.free_count):
            S, T = x_src[i], x_dst[j]
            g = gh[j, i]
            ev = cw.constant_map(T, S)
            if j == 0 and i == 0:
                pad = g - src.n_torsion - 1
                if pad:
                    summands.append(BlueprintSummand("K0", (j, i), "evaluation", pad, cmap=ev, label="f(θ)"))
                for k, N in enumerate(src.torsion):
                    incl = cw.wedge_inclusion(Xi, k)
                    pieces = []
                    for l, part in enumerate(Xj.parts):
                        if part.name == "pt":
                            pieces.append(cw.constant_map(part, Xi))
                        else:
                            pieces.append(incl.compose(cw.build_psi_star(N, dst.torsion[l], c.tau[l, k])))
                    f = cw.wedge_maps(pieces, source=Xj)
                    summands.append(BlueprintSummand("K0", (j, i), "psi_tau", 1, cmap=f, label=f"ψτ[{k}]"))
                bundle = _twisted_bott(Xj, c.t.col(0)) if dst.torsion else cw.LineBundleClass.trivial(Xj)
                summands.append(BlueprintSummand("K0", (j, i), "psi_t", 1, bundle=bundle, label="ψt"))
            elif j == 0:
                if g - 1:
                    summands.append(BlueprintSummand("K0", (j, i), "evaluation", g - 1, cmap=ev, label="1"))
                bundle = _twisted_bott(Xj, c.t.col(i)) if dst.torsion else cw.LineBundleClass.trivial(Xj)
                summands.append(BlueprintSummand("K0", (j, i), "bundle", 1, bundle=bundle, label=f"p({i})"))
            else:
                summands.append(BlueprintSummand("K0", (j, i), "evaluation", g, cmap=ev, label="f(θ)"))

    # K1 side ------------------------------------------------------------
    Yn = _y_space(src, deg)
    Ym = _y_space(dst, deg)
    F, Fp = src.k_free, dst.k_free
    target_parts = Ym.parts

    def wedge_over_target(piece) -> cw.CellularMap:
        return cw.wedge_maps([piece(idx, part) for idx, part in enumerate(target_parts)], source=Ym)

    for k, M in enumerate(src.k_torsion):
        incl = cw.wedge_inclusion(Yn, F + k)

        def piece(idx, part, k=k, M=M, incl=incl):
            if idx < Fp or part.name == "pt":
                return cw.constant_map(part, Yn)
            l = idx - Fp
            return incl.compose(cw.build_suspended_psi_star(M, dst.k_torsion[l], c.chi_tau[l, k]))

        summands.append(BlueprintSummand("K1", (0, 0), "k1_torsion", 1, cmap=wedge_over_target(piece),
                                         label=f"ΣΨ[{k}]"))
    for i in range(F):
        incl = cw.wedge_inclusion(Yn, i)

        def piece(idx, part, i=i, incl=incl):
            if part.name == "pt":
                return cw.constant_map(part, Yn)
            if idx < Fp:
                return incl.compose(cw.build_sphere_degree(deg, c.chi_hat[idx, i]))
            l = idx - Fp
            Mp = dst.k_torsion[l]
            return incl.compose(cw.build_omega_star(Mp).compose(cw.build_suspended_psi_star(Mp, Mp, c.chi_t[l, i])))

        summands.append(BlueprintSummand("K1", (0, 0), "k1_free", 1, cmap=wedge_over_target(piece),
                                         label=f"S[{i}]"))
    used = src.n_k_torsion + F
    pad = gh[0, 0] - used
    if pad:
        summands.append(BlueprintSummand("K1", (0, 0), "evaluation", pad, cmap=cw.constant_map(Ym, Yn),
                                         label="f(θ)"))
    return PsiBlueprint(src, dst, c, x_src, x_dst, Yn, Ym, deg, tuple(summands))


def _k0_hom(s: BlueprintSummand, S: cw.CWComplex, T: cw.CWComplex) -> GroupHom:
    """Contribution of one K⁰ summand as a map ``K⁰(S) → K⁰(T)``."""
    K0S, _ = cw.k_presentations(S)
    K0T, _ = cw.k_presentations(T)
    if s.cmap is not None:
        h0 = cw.induced_map(s.cmap, 0)
        h2 = cw.induced_map(s.cmap, 2)
        M = IntMatrix.block_diag([h0.matrix, h2.matrix])
        return GroupHom(K0S, K0T, M)
    cls = s.bundle.k0_class()
    # f ↦ f(θ)·p : rank coordinate times the class of p
    cols = [cls] + [(0,) * len(K0T)] * (len(K0S) - 1)
    return GroupHom(K0S, K0T, IntMatrix.from_rows(list(zip(*cols)), len(K0S)))


def induced_K(bp: PsiBlueprint) -> tuple[GroupHom, GroupHom]:
    """Total maps on ``K₀`` (``H_n → H_{n+1}``) and ``K₁`` (``K_n → K_{n+1}``)."""
    src, dst = bp.src, bp.dst
    H, Hp = src.H, dst.H
    F, Fp = src.free_count, dst.free_count
    # positions of each piece's K⁰ coordinates inside H
    def coords(stage_free: int, torsion: int, idx: int) -> list[int]:
        return [0] + [stage_free + k for k in range(torsion)] if idx == 0 else [idx]

    total = [[0] * len(H) for _ in range(len(Hp))]
    k1 = [[0] * len(src.K) for _ in range(len(dst.K))]
    for s in bp.summands:
        if s.side == "K0":
            j, i = s.block
            h = _k0_hom(s, bp.x_src[i], bp.x_dst[j])
            rows = coords(Fp, dst.n_torsion, j)
            cols = coords(F, src.n_torsion, i)
            for a, r in enumerate(rows):
                for b, cc in enumerate(cols):
                    total[r][cc] += s.multiplicity * h.matrix[a, b]
        else:
            h = cw.induced_map(s.cmap, bp.k1_degree)
            for a in range(h.matrix.rows):
                for b in range(h.matrix.cols):
                    k1[a][b] += s.multiplicity * h.matrix[a, b]
    on_K0 = GroupHom(H, Hp, IntMatrix.from_rows(total, len(H)))
    on_K1 = GroupHom(src.K, dst.K, IntMatrix.from_rows(k1, len(src.K)))
    return on_K0, on_K1


# ---------------------------------------------------------------------------
# random instances


def random_instance(rng: random.Random, max_dim: int = 4, max_order: int = 12,
                    max_entry: int = 9) -> tuple[StageData, StageData, ConnectingData]:
    """A random valid connecting step.

    Free counts are at most ``max_dim``; torsion lists have at most
    ``max_dim - 1`` entries drawn from ``2..max_order``.  Matrix entries are
    drawn from ``1..max_entry``, except that a torsion-to-torsion entry has
    to be a multiple of ``N'/gcd(N, N')`` to define a homomorphism; such an
    entry is the smallest admissible multiple, which can exceed
    ``max_entry``.
    """

    def stage() -> dict:
        return {
            "free_count": rng.randint(1, max_dim),
            "torsion": tuple(rng.randint(2, max_order) for _ in range(rng.randint(0, max_dim - 1))),
            "k_free": rng.randint(0, max_dim - 1),
            "k_torsion": tuple(rng.randint(2, max_order) for _ in range(rng.randint(0, max_dim - 1))),
        }

    s, d = stage(), stage()

    def torsion_block(rows: Sequence[int], cols: Sequence[int]) -> list[list[int]]:
        out = []
        for Np in rows:
            row = []
            for N in cols:
                step = Np // gcd(Np, N)
                choices = [x for x in range(step, max_entry + 1, step)] or [step]
                row.append(rng.choice(choices))
            out.append(row)
        return out

    def free_block(rows: int, cols: int, lo: int = 1) -> list[list[int]]:
        return [[rng.randint(lo, max_entry) for _ in range(cols)] for _ in range(rows)]

    gh = free_block(d["free_count"], s["free_count"])
    need = max(len(s["torsion"]) + 1, len(s["k_torsion"]) + s["k_free"])
    gh[0][0] = rng.randint(max(need, 1), max(need, max_entry))
    src = StageData(s["free_count"], s["torsion"], s["k_free"], s["k_torsion"])
    dst = StageData(d["free_count"], d["torsion"], d["k_free"], d["k_torsion"])
    c = ConnectingData.from_lists(
        src, dst, gh,
        torsion_block(d["torsion"], s["torsion"]),
        free_block(len(d["torsion"]), s["free_count"]),
        free_block(d["k_free"], s["k_free"]),
        torsion_block(d["k_torsion"], s["k_torsion"]),
        free_block(len(d["k_torsion"]), s["k_free"]),
    )
    # order units: positive ranks, arbitrary torsion, mapped forward by γ
    u = tuple(rng.randint(1, max_entry) for _ in range(src.free_count)) + tuple(
        rng.randrange(N) for N in src.torsion)
    src = replace(src, order_unit=u)
    dst = replace(dst, order_unit=c.gamma(src, dst)(u))
    return src, dst, c
