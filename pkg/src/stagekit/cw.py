"""Finite CW complexes of dimension at most three, cellular maps and cohomology.

A complex is stored through its cellular chain complex: the number of cells
in each dimension and the integer boundary matrices.  Cohomology is computed
from the cochain complex ``δ_k = ∂_{k+1}^T`` with Smith normal form.

The named constructors (points, spheres, Moore spaces, their suspensions and
finite wedges) produce *catalog* complexes.  Only for those is K-theory
read off as even and odd cohomology; :func:`k_groups` refuses anything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .intlin import (
    CyclicSum,
    FGAbGroup,
    GroupHom,
    IntMatrix,
    integer_kernel,
    smith_normal_form,
    solve_integer,
    unimodular_inverse,
)

__all__ = [
    "MAX_DIM",
    "CWComplex",
    "CellularMap",
    "CohomologyBasis",
    "LineBundleClass",
    "point",
    "sphere",
    "build_moore_X",
    "build_moore_Y",
    "suspend",
    "wedge",
    "wedge_or_point",
    "catalog_space",
    "cohomology",
    "reduced_cohomology",
    "cohomology_basis",
    "induced_map",
    "identity_map",
    "constant_map",
    "wedge_inclusion",
    "wedge_maps",
    "wedge_of_maps",
    "suspend_map",
    "build_psi_star",
    "build_suspended_psi_star",
    "build_omega_star",
    "build_sphere_degree",
    "k_groups",
    "k_presentations",
    "bott_class",
]

MAX_DIM = 3


@dataclass(frozen=True)
class CWComplex:
    """Cellular chain complex of a based CW complex.

    ``cells[k]`` is the number of ``k``-cells, ``boundary[k]`` the matrix of
    ``∂_k : C_k → C_{k-1}`` for ``k = 1..3``.  ``parts`` remembers the wedge
    summands when the complex was built by :func:`wedge`.
    """

    cells: tuple[int, int, int, int]
    boundary: dict[int, IntMatrix]
    basepoint: int = 0
    catalog: bool = False
    name: str = "X"
    parts: tuple["CWComplex", ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        cells = tuple(self.cells)
        if len(cells) != MAX_DIM + 1 or any(c < 0 for c in cells):
            raise ValueError(f"cells must be four non-negative counts, got {cells}")
        if cells[0] < 1:
            raise ValueError("a based complex needs at least one 0-cell")
        object.__setattr__(self, "cells", cells)
        bd = dict(self.boundary)
        for k in range(1, MAX_DIM + 1):
            M = bd.get(k, IntMatrix.zeros(cells[k - 1], cells[k]))
            if M.shape != (cells[k - 1], cells[k]):
                raise ValueError(f"∂_{k} has shape {M.shape}, expected {(cells[k - 1], cells[k])}")
            bd[k] = M
        for k in range(2, MAX_DIM + 1):
            if not (bd[k - 1] @ bd[k]).is_zero():
                raise ValueError(f"∂_{k - 1}∂_{k} != 0 in {self.name}")
        if any(sum(bd[1].col(j)) != 0 for j in range(cells[1])):
            raise ValueError("1-cell boundaries must have coefficient sum zero")
        if not 0 <= self.basepoint < cells[0]:
            raise ValueError("basepoint is not a 0-cell")
        object.__setattr__(self, "boundary", bd)

    def __hash__(self) -> int:
        return hash((self.cells, tuple(self.boundary[k] for k in range(1, MAX_DIM + 1)), self.basepoint, self.catalog, self.name))

    @property
    def dim(self) -> int:
        return max((k for k in range(MAX_DIM + 1) if self.cells[k]), default=0)

    def coboundary(self, k: int) -> IntMatrix:
        """``δ_k : C^k → C^{k+1}``; zero maps outside the range ``0..2``."""
        if 0 <= k < MAX_DIM:
            return self.boundary[k + 1].T
        if k == MAX_DIM:
            return IntMatrix.zeros(0, self.cells[MAX_DIM])
        if k == -1:
            return IntMatrix.zeros(self.cells[0], 0)
        raise ValueError(f"degree {k} out of range")

    def non_base_cells(self, k: int) -> list[int]:
        return [c for c in range(self.cells[k]) if not (k == 0 and c == self.basepoint)]

    def part_offsets(self) -> list[tuple[int, ...]]:
        """Cell offsets of each wedge summand, per dimension.

        Dimension 0 offsets count non-base 0-cells placed after the shared
        basepoint (which is cell 0 of a wedge).
        """
        out = []
        acc = [1, 0, 0, 0]
        for p in self.parts:
            out.append(tuple(acc))
            acc[0] += p.cells[0] - 1
            for k in range(1, MAX_DIM + 1):
                acc[k] += p.cells[k]
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "cells": list(self.cells),
            "boundary": {str(k): self.boundary[k].to_rows() for k in range(1, MAX_DIM + 1)},
            "basepoint": self.basepoint,
            "catalog": self.catalog,
        }

    def to_dot(self) -> str:
        """Graphviz rendering of the 1-skeleton.

        A 1-cell with zero boundary is a loop; it is drawn at the basepoint,
        which is exact for the single-vertex complexes of the catalog.
        """
        lines = [f'graph "{self.name}" {{']
        for v in range(self.cells[0]):
            shape = ' [shape=doublecircle]' if v == self.basepoint else ""
            lines.append(f"  v{v}{shape};")
        d1 = self.boundary[1]
        for e in range(self.cells[1]):
            col = d1.col(e)
            heads = [i for i, x in enumerate(col) if x > 0]
            tails = [i for i, x in enumerate(col) if x < 0]
            a = tails[0] if tails else self.basepoint
            b = heads[0] if heads else self.basepoint
            lines.append(f'  v{a} -- v{b} [label="e{e}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# catalog constructors


def point() -> CWComplex:
    return CWComplex((1, 0, 0, 0), {}, catalog=True, name="pt")


def sphere(k: int) -> CWComplex:
    """``S^k`` with one 0-cell and one ``k``-cell, ``1 <= k <= 3``."""
    if not 1 <= k <= MAX_DIM:
        raise ValueError(f"sphere dimension must be in 1..{MAX_DIM}")
    cells = [1, 0, 0, 0]
    cells[k] = 1
    return CWComplex(tuple(cells), {}, catalog=True, name=f"S{k}")


def build_moore_X(N: int) -> CWComplex:
    """The Moore space ``D² ∪ S¹`` attached along a degree ``N`` map."""
    if isinstance(N, bool) or not isinstance(N, int) or N < 2:
        raise ValueError(f"Moore space order must be an integer >= 2, got {N!r}")
    return CWComplex(
        (1, 1, 1, 0),
        {1: IntMatrix.zeros(1, 1), 2: IntMatrix.from_rows([[N]])},
        catalog=True,
        name=f"X{N}",
    )


def suspend(X: CWComplex) -> CWComplex:
    """Reduced suspension on the cell structure.

    Every cell other than the basepoint is suspended one dimension up and the
    suspension of the basepoint is collapsed, so the reduced cellular chain
    complex is shifted by one.
    """
    if X.dim >= MAX_DIM:
        raise ValueError(f"suspension of a {X.dim}-dimensional complex exceeds dimension {MAX_DIM}")
    nb = X.non_base_cells(0)
    cells = (1, len(nb), X.cells[1], X.cells[2])
    bd = {
        1: IntMatrix.zeros(1, len(nb)),
        2: X.boundary[1].submatrix(nb, range(X.cells[1])),
        3: X.boundary[2],
    }
    name = f"Y{X.name[1:]}" if X.name.startswith("X") and X.name[1:].isdigit() else f"S({X.name})"
    if X.name.startswith("S") and X.name[1:].isdigit():
        name = f"S{int(X.name[1:]) + 1}"
    return CWComplex(cells, bd, catalog=X.catalog, name=name)


def build_moore_Y(N: int) -> CWComplex:
    """``Σ X_N``, whose only reduced cohomology is ``Z/N`` in degree three."""
    return suspend(build_moore_X(N))


def wedge(parts: Sequence[CWComplex]) -> CWComplex:
    """One-point union identifying all basepoints.

    The shared basepoint is 0-cell 0; the remaining cells of each part follow
    in order, so cohomology generators appear part by part.
    """
    parts = tuple(parts)
    if not parts:
        raise ValueError("wedge of an empty list")
    cells = [1, 0, 0, 0]
    for p in parts:
        cells[0] += p.cells[0] - 1
        for k in range(1, MAX_DIM + 1):
            cells[k] += p.cells[k]
    blocks: dict[int, list[IntMatrix]] = {k: [] for k in range(1, MAX_DIM + 1)}
    base_row_d1: list[int] = []
    for p in parts:
        nb = p.non_base_cells(0)
        blocks[1].append(p.boundary[1].submatrix(nb, range(p.cells[1])))
        base_row_d1 += list(p.boundary[1].row(p.basepoint))
        for k in (2, 3):
            blocks[k].append(p.boundary[k])
    d1 = IntMatrix.block_diag(blocks[1])
    d1 = IntMatrix.vstack([IntMatrix(1, cells[1], tuple(base_row_d1)), d1], cols=cells[1])
    bd = {1: d1, 2: IntMatrix.block_diag(blocks[2]), 3: IntMatrix.block_diag(blocks[3])}
    name = "∨".join(p.name for p in parts)
    return CWComplex(tuple(cells), bd, catalog=all(p.catalog for p in parts), name=name, parts=parts)


def wedge_or_point(parts: Sequence[CWComplex]) -> CWComplex:
    """:func:`wedge`, except that the empty wedge is a point."""
    return wedge(parts) if parts else wedge([point()])


def catalog_space(name: str) -> CWComplex:
    """Rebuild a catalog complex from its name, e.g. ``"X4"``, ``"S3"`` or ``"X2∨Y3"``."""
    pieces = name.split("∨")
    if len(pieces) > 1:
        return wedge([catalog_space(p) for p in pieces])
    if name == "pt":
        return point()
    kind, digits = name[:1], name[1:]
    if kind in "SXY" and digits.isdigit():
        n = int(digits)
        return {"S": sphere, "X": build_moore_X, "Y": build_moore_Y}[kind](n)
    raise ValueError(f"unknown catalog space {name!r}")


# ---------------------------------------------------------------------------
# cohomology


@dataclass(frozen=True)
class CohomologyBasis:
    """A presentation of ``H^k`` by cocycle representatives.

    ``generators[i]`` is a cocycle in ``C^k`` whose class has order
    ``orders[i]`` (0 for infinite order); the classes form a direct-sum
    basis.  ``coordinates`` expresses any cocycle in that basis.
    """

    degree: int
    generators: tuple[tuple[int, ...], ...]
    orders: tuple[int, ...]
    _coords: Callable[[Sequence[int]], tuple[int, ...]] = field(compare=False, repr=False)

    @property
    def group(self) -> CyclicSum:
        return CyclicSum(self.orders)

    def coordinates(self, cocycle: Sequence[int]) -> tuple[int, ...]:
        return self.group.reduce(self._coords(cocycle))


def _is_monomial(M: IntMatrix) -> bool:
    rows = [0] * M.rows
    for j in range(M.cols):
        nz = [i for i, x in enumerate(M.col(j)) if x]
        if len(nz) > 1:
            return False
        for i in nz:
            rows[i] += 1
            if rows[i] > 1:
                return False
    return True


def _cell_basis(X: CWComplex, k: int) -> CohomologyBasis:
    """Cell-adapted basis when the incoming and outgoing coboundaries are monomial."""
    n = X.cells[k]
    d_out = X.coboundary(k)
    d_in = X.coboundary(k - 1)
    gens, orders = [], []
    for c in range(n):
        if any(d_out.col(c)):
            continue
        row = [x for x in d_in.row(c) if x]
        order = abs(row[0]) if row else 0
        if order == 1:
            continue
        gens.append(tuple(int(i == c) for i in range(n)))
        orders.append(order)
    cells = [g.index(1) for g in gens]

    def coords(cocycle: Sequence[int]) -> tuple[int, ...]:
        return tuple(cocycle[c] for c in cells)

    return CohomologyBasis(k, tuple(gens), tuple(orders), coords)


def _snf_basis(X: CWComplex, k: int) -> CohomologyBasis:
    if X.cells[k] == 0:
        return CohomologyBasis(k, (), (), lambda c: ())
    K = integer_kernel(X.coboundary(k))  # columns span the cocycles
    B = X.coboundary(k - 1)
    cols = []
    for j in range(B.cols):
        w = solve_integer(K, B.col(j))
        if w is None:
            raise ArithmeticError("coboundary is not a cocycle")
        cols.append(w)
    W = IntMatrix.from_rows(list(zip(*cols)), len(cols)) if cols else IntMatrix.zeros(K.cols, 0)
    snf = smith_normal_form(W)
    diag = list(snf.diagonal) + [0] * (K.cols - len(snf.diagonal))
    basis = K @ unimodular_inverse(snf.U)
    keep = [i for i in range(K.cols) if diag[i] != 1]
    gens = tuple(basis.col(i) for i in keep)
    orders = tuple(diag[i] for i in keep)
    U = snf.U

    def coords(cocycle: Sequence[int]) -> tuple[int, ...]:
        w = solve_integer(K, list(cocycle))
        if w is None:
            raise ValueError("not a cocycle")
        y = U.apply(w)
        return tuple(y[i] for i in keep)

    return CohomologyBasis(k, gens, orders, coords)


def cohomology_basis(X: CWComplex, k: int) -> CohomologyBasis:
    """Cocycle generators of ``H^k(X)``.

    For the catalog the coboundaries are monomial and the generators are
    single cells, listed in cell order (so wedge summands appear in the
    order they were wedged).  Otherwise a Smith normal form basis is used.
    """
    if not 0 <= k <= MAX_DIM:
        raise ValueError(f"degree {k} out of range")
    if _is_monomial(X.coboundary(k)) and _is_monomial(X.coboundary(k - 1)):
        return _cell_basis(X, k)
    return _snf_basis(X, k)


def cohomology(X: CWComplex, k: int) -> FGAbGroup:
    """``H^k(X; Z)`` in invariant-factor form."""
    return cohomology_basis(X, k).group.canonical()


def reduced_cohomology(X: CWComplex, k: int) -> FGAbGroup:
    """Reduced cohomology; differs from :func:`cohomology` only in degree 0."""
    H = cohomology(X, k)
    if k == 0:
        return FGAbGroup(H.free_rank - 1, H.torsion)
    return H


# ---------------------------------------------------------------------------
# cellular maps


@dataclass(frozen=True)
class CellularMap:
    """A based chain map ``C_*(source) → C_*(target)``.

    ``chain[k]`` has shape ``(cells_k(target), cells_k(source))``.
    """

    source: CWComplex
    target: CWComplex
    chain: dict[int, IntMatrix]
    name: str = "f"

    def __post_init__(self) -> None:
        S, T = self.source, self.target
        ch = dict(self.chain)
        for k in range(MAX_DIM + 1):
            M = ch.get(k, IntMatrix.zeros(T.cells[k], S.cells[k]))
            if M.shape != (T.cells[k], S.cells[k]):
                raise ValueError(f"chain map in degree {k} has shape {M.shape}, expected {(T.cells[k], S.cells[k])}")
            ch[k] = M
        for k in range(1, MAX_DIM + 1):
            if ch[k - 1] @ S.boundary[k] != T.boundary[k] @ ch[k]:
                raise ValueError(f"{self.name} does not commute with ∂_{k}")
        expected = tuple(int(i == T.basepoint) for i in range(T.cells[0]))
        if ch[0].col(S.basepoint) != expected:
            raise ValueError(f"{self.name} does not preserve the basepoint")
        object.__setattr__(self, "chain", ch)

    def compose(self, inner: "CellularMap") -> "CellularMap":
        """``self ∘ inner``."""
        if inner.target != self.source:
            raise ValueError("cellular maps are not composable")
        return CellularMap(inner.source, self.target,
                           {k: self.chain[k] @ inner.chain[k] for k in range(MAX_DIM + 1)},
                           name=f"{self.name}∘{inner.name}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source": self.source.name,
            "target": self.target.name,
            "chain": {str(k): self.chain[k].to_rows() for k in range(MAX_DIM + 1)},
        }


def identity_map(X: CWComplex) -> CellularMap:
    return CellularMap(X, X, {k: IntMatrix.identity(X.cells[k]) for k in range(MAX_DIM + 1)}, name="id")


def constant_map(source: CWComplex, target: CWComplex) -> CellularMap:
    """Everything to the basepoint of ``target``."""
    f0 = IntMatrix.from_rows(
        [[int(i == target.basepoint)] * source.cells[0] for i in range(target.cells[0])],
        source.cells[0],
    )
    return CellularMap(source, target, {0: f0}, name="const")


def wedge_inclusion(W: CWComplex, index: int) -> CellularMap:
    """Inclusion of the ``index``-th summand of a wedge."""
    if not W.parts:
        raise ValueError("complex was not built as a wedge")
    P = W.parts[index]
    off = W.part_offsets()[index]
    chain = {}
    rows0 = [[0] * P.cells[0] for _ in range(W.cells[0])]
    rows0[0][P.basepoint] = 1
    for r, c in enumerate(P.non_base_cells(0)):
        rows0[off[0] + r][c] = 1
    chain[0] = IntMatrix.from_rows(rows0, P.cells[0])
    for k in range(1, MAX_DIM + 1):
        rows = [[0] * P.cells[k] for _ in range(W.cells[k])]
        for c in range(P.cells[k]):
            rows[off[k] + c][c] = 1
        chain[k] = IntMatrix.from_rows(rows, P.cells[k])
    return CellularMap(P, W, chain, name=f"incl{index}")


def wedge_maps(maps: Sequence[CellularMap], source: CWComplex | None = None) -> CellularMap:
    """The map out of a wedge that restricts to ``maps[i]`` on summand ``i``.

    ``source`` defaults to the wedge of the maps' sources; pass it to reuse
    an existing wedge.
    """
    if not maps:
        raise ValueError("need at least one map")
    target = maps[0].target
    if any(f.target != target for f in maps):
        raise ValueError("maps out of a wedge need a common target")
    W = source if source is not None else wedge([f.source for f in maps])
    if len(W.parts) != len(maps) or any(p != f.source for p, f in zip(W.parts, maps)):
        raise ValueError("wedge summands do not match the map sources")
    chain = {}
    cols0 = [tuple(int(i == target.basepoint) for i in range(target.cells[0]))]
    for f in maps:
        cols0 += [f.chain[0].col(c) for c in f.source.non_base_cells(0)]
    chain[0] = IntMatrix.from_rows(list(zip(*cols0)), W.cells[0])
    for k in range(1, MAX_DIM + 1):
        blocks = [f.chain[k] for f in maps]
        chain[k] = IntMatrix.hstack(blocks, rows=target.cells[k])
    return CellularMap(W, target, chain, name="[" + ",".join(f.name for f in maps) + "]")


def wedge_of_maps(maps: Sequence[CellularMap]) -> CellularMap:
    """``∨ f_i : ∨ A_i → ∨ B_i``."""
    if not maps:
        raise ValueError("need at least one map")
    target = wedge([f.target for f in maps])
    incl = [wedge_inclusion(target, i).compose(f) for i, f in enumerate(maps)]
    return wedge_maps(incl)


def suspend_map(f: CellularMap) -> CellularMap:
    """``Σf : ΣX → ΣY`` on reduced chains."""
    S, T = suspend(f.source), suspend(f.target)
    snb, tnb = f.source.non_base_cells(0), f.target.non_base_cells(0)
    chain = {
        0: IntMatrix.identity(1),
        1: f.chain[0].submatrix(tnb, snb),
        2: f.chain[1],
        3: f.chain[2],
    }
    return CellularMap(S, T, chain, name=f"Σ{f.name}")


def induced_map(f: CellularMap, k: int) -> GroupHom:
    """``f^* : H^k(target) → H^k(source)`` on the presentations of :func:`cohomology_basis`."""
    src = cohomology_basis(f.target, k)
    dst = cohomology_basis(f.source, k)
    fT = f.chain[k].T
    cols = [dst.coordinates(fT.apply(g)) for g in src.generators]
    rows = [list(r) for r in zip(*cols)] if cols else [[] for _ in dst.orders]
    return GroupHom(src.group, dst.group, IntMatrix.from_rows(rows, len(src.orders)))


# ---------------------------------------------------------------------------
# named maps of the catalog


def build_psi_star(N: int, N_prime: int, m: int) -> CellularMap:
    """The map ``X_{N'} → X_N`` of degree ``m`` on the 2-cell.

    It has degree ``m' = m·N/N'`` on the 1-cell; this is a chain map exactly
    when ``N'`` divides ``m·N``.
    """
    X, Xp = build_moore_X(N), build_moore_X(N_prime)
    if isinstance(m, bool) or not isinstance(m, int) or m < 0:
        raise ValueError(f"degree must be a non-negative integer, got {m!r}")
    if (m * N) % N_prime:
        raise ValueError(f"{N_prime} does not divide {m}·{N}; no such map")
    m_prime = m * N // N_prime
    chain = {0: IntMatrix.identity(1), 1: IntMatrix.from_rows([[m_prime]]), 2: IntMatrix.from_rows([[m]])}
    return CellularMap(Xp, X, chain, name=f"Ψ{m}[{N_prime}→{N}]")


def build_suspended_psi_star(N: int, N_prime: int, m: int) -> CellularMap:
    """``Σ`` of :func:`build_psi_star`, a map ``Y_{N'} → Y_N``."""
    return suspend_map(build_psi_star(N, N_prime, m))


def build_omega_star(N: int) -> CellularMap:
    """Collapse ``Y_N → S³`` of the 2-skeleton; degree one on the top cell."""
    Y = build_moore_Y(N)
    return CellularMap(Y, sphere(3), {0: IntMatrix.identity(1), 3: IntMatrix.identity(1)}, name=f"Ω[{N}]")


def build_sphere_degree(k: int, m: int) -> CellularMap:
    """A self-map of ``S^k`` of degree ``m``."""
    S = sphere(k)
    return CellularMap(S, S, {0: IntMatrix.identity(1), k: IntMatrix.from_rows([[m]])}, name=f"deg{m}")


# ---------------------------------------------------------------------------
# K-theory of catalog complexes


def _require_catalog(X: CWComplex) -> None:
    if not X.catalog:
        raise ValueError(f"{X.name} is not a catalog complex; K = H^even ⊕ H^odd is not justified for it")


def k_presentations(X: CWComplex) -> tuple[CyclicSum, CyclicSum]:
    """``K⁰ = H⁰ ⊕ H²`` and ``K¹ = H¹ ⊕ H³`` in the generator order of the cohomology bases."""
    _require_catalog(X)
    h = [cohomology_basis(X, k).group for k in range(MAX_DIM + 1)]
    return h[0].direct_sum(h[2]), h[1].direct_sum(h[3])


def k_groups(X: CWComplex) -> tuple[FGAbGroup, FGAbGroup]:
    K0, K1 = k_presentations(X)
    return K0.canonical(), K1.canonical()


@dataclass(frozen=True)
class LineBundleClass:
    """A line bundle recorded only through its first Chern class in ``H²(base)``."""

    base: CWComplex
    chern: tuple[int, ...]

    def __post_init__(self) -> None:
        H2 = cohomology_basis(self.base, 2).group
        object.__setattr__(self, "chern", H2.reduce(tuple(self.chern)))

    @classmethod
    def trivial(cls, base: CWComplex) -> "LineBundleClass":
        return cls(base, (0,) * len(cohomology_basis(base, 2).orders))

    def pullback(self, f: CellularMap) -> "LineBundleClass":
        if f.target != self.base:
            raise ValueError("pullback along a map with a different target")
        return LineBundleClass(f.source, induced_map(f, 2)(self.chern))

    def k0_class(self) -> tuple[int, ...]:
        """Class in ``K⁰ = H⁰ ⊕ H²``: rank one at every component, plus the Chern class."""
        _require_catalog(self.base)
        rank = (1,) * len(cohomology_basis(self.base, 0).orders)
        return rank + self.chern


def bott_class(X: CWComplex) -> LineBundleClass:
    """The line bundle whose Chern class is the sum of the ``H²`` generators.

    On ``X_N`` this is the bundle pulled back from the Bott bundle on ``S²``;
    its K⁰ class is ``(1, 1)`` in ``Z ⊕ Z/N``.
    """
    n = len(cohomology_basis(X, 2).orders)
    return LineBundleClass(X, (1,) * n)
