"""Exact integer linear algebra.

Everything here works over Python integers, so entries never overflow.  The
module provides a small immutable matrix type, a deterministic Smith normal
form, finitely generated abelian groups in invariant-factor form, and
homomorphisms between direct sums of cyclic groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "IntMatrix",
    "SmithDecomposition",
    "smith_normal_form",
    "FGAbGroup",
    "CyclicSum",
    "GroupHom",
    "cokernel",
    "kernel",
    "image",
    "decompose_gamma",
    "reassemble_gamma",
    "solve_integer",
    "integer_kernel",
    "unimodular_inverse",
    "in_subgroup",
]


def _check_int(value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"matrix entries must be int, got {type(value).__name__}")
    return value


@dataclass(frozen=True)
class IntMatrix:
    """A dense integer matrix stored row-major.

    ``rows`` and ``cols`` are kept explicitly so that empty shapes such as
    0x3 are representable; they show up as boundary maps of complexes with
    no cells in some dimension.
    """

    rows: int
    cols: int
    data: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, "
                f"got {len(self.data)}"
            )
        for x in self.data:
            _check_int(x)

    # construction -------------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(x for r in rows for x in r))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls.diagonal([1] * n)

    @classmethod
    def diagonal(cls, values: Sequence[int], rows: int | None = None, cols: int | None = None) -> "IntMatrix":
        rows = len(values) if rows is None else rows
        cols = len(values) if cols is None else cols
        if len(values) > min(rows, cols):
            raise ValueError("too many diagonal values for shape")
        data = [0] * (rows * cols)
        for i, v in enumerate(values):
            data[i * cols + i] = v
        return cls(rows, cols, tuple(data))

    @classmethod
    def column(cls, values: Sequence[int]) -> "IntMatrix":
        return cls(len(values), 1, tuple(values))

    # access ---------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx: tuple[int, int]) -> int:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(idx)
        return self.data[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.data[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple[int, ...]:
        return tuple(self.data[i * self.cols + j] for i in range(self.rows))

    def to_rows(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def is_zero(self) -> bool:
        return not any(self.data)

    # algebra ---------------------------------------------------------------
    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows,
                         tuple(self.data[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)))

    @property
    def T(self) -> "IntMatrix":
        return self.transpose()

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ocols = [other.col(j) for j in range(other.cols)]
        out = []
        for i in range(self.rows):
            r = self.row(i)
            for c in ocols:
                out.append(sum(a * b for a, b in zip(r, c) if a and b))
        return IntMatrix(self.rows, other.cols, tuple(out))

    def _same_shape(self, other: "IntMatrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        self._same_shape(other)
        return IntMatrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.data, other.data)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        self._same_shape(other)
        return IntMatrix(self.rows, self.cols, tuple(a - b for a, b in zip(self.data, other.data)))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(-a for a in self.data))

    def scale(self, k: int) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(k * a for a in self.data))

    def apply(self, vector: Sequence[int]) -> tuple[int, ...]:
        if len(vector) != self.cols:
            raise ValueError("vector length does not match column count")
        return tuple(sum(a * b for a, b in zip(self.row(i), vector) if a and b) for i in range(self.rows))

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "IntMatrix":
        return IntMatrix(len(row_idx), len(col_idx),
                         tuple(self.data[i * self.cols + j] for i in row_idx for j in col_idx))

    @staticmethod
    def hstack(blocks: Sequence["IntMatrix"], rows: int | None = None) -> "IntMatrix":
        if not blocks:
            return IntMatrix.zeros(rows or 0, 0)
        r = blocks[0].rows
        if any(b.rows != r for b in blocks):
            raise ValueError("hstack needs equal row counts")
        cols = sum(b.cols for b in blocks)
        return IntMatrix(r, cols, tuple(x for i in range(r) for b in blocks for x in b.row(i)))

    @staticmethod
    def vstack(blocks: Sequence["IntMatrix"], cols: int | None = None) -> "IntMatrix":
        if not blocks:
            return IntMatrix.zeros(0, cols or 0)
        c = blocks[0].cols
        if any(b.cols != c for b in blocks):
            raise ValueError("vstack needs equal column counts")
        return IntMatrix(sum(b.rows for b in blocks), c, tuple(x for b in blocks for x in b.data))

    @staticmethod
    def block_diag(blocks: Sequence["IntMatrix"]) -> "IntMatrix":
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        data = [0] * (rows * cols)
        r0 = c0 = 0
        for b in blocks:
            for i in range(b.rows):
                for j in range(b.cols):
                    data[(r0 + i) * cols + c0 + j] = b.data[i * b.cols + j]
            r0 += b.rows
            c0 += b.cols
        return IntMatrix(rows, cols, tuple(data))

    def det(self) -> int:
        """Determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        a = self.to_rows()
        sign = 1
        prev = 1
        for k in range(n - 1):
            if a[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if swap is None:
                    return 0
                a[k], a[swap] = a[swap], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def rank(self) -> int:
        return smith_normal_form(self).rank

    def to_json(self) -> list[list[int]]:
        return self.to_rows()

    def __repr__(self) -> str:
        return f"IntMatrix({self.to_rows()!r})" if self.rows else f"IntMatrix.zeros(0, {self.cols})"


@dataclass(frozen=True)
class SmithDecomposition:
    """``U @ A @ V == D`` with ``U``, ``V`` unimodular and ``D`` diagonal."""

    U: IntMatrix
    D: IntMatrix
    V: IntMatrix
    rows: int
    cols: int

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.D[i, i] for i in range(min(self.rows, self.cols)))

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        return tuple(d for d in self.diagonal if d != 0)


def smith_normal_form(A: IntMatrix) -> SmithDecomposition:
    """Smith normal form with a deterministic pivot rule.

    At each step the pivot is the nonzero entry of smallest absolute value in
    the remaining submatrix, ties broken by (row, column).  The result
    satisfies ``U @ A @ V == D`` with nonnegative diagonal entries forming a
    divisibility chain.
    """
    m, n = A.rows, A.cols
    a = A.to_rows()
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i: int, k: int) -> None:
        a[i], a[k] = a[k], a[i]
        U[i], U[k] = U[k], U[i]

    def swap_cols(j: int, k: int) -> None:
        for r in a:
            r[j], r[k] = r[k], r[j]
        for r in V:
            r[j], r[k] = r[k], r[j]

    def add_row(dst: int, src: int, q: int) -> None:
        # row_dst += q * row_src
        rs, rd = a[src], a[dst]
        for j in range(n):
            if rs[j]:
                rd[j] += q * rs[j]
        us, ud = U[src], U[dst]
        for j in range(m):
            if us[j]:
                ud[j] += q * us[j]

    def add_col(dst: int, src: int, q: int) -> None:
        for r in a:
            if r[src]:
                r[dst] += q * r[src]
        for r in V:
            if r[src]:
                r[dst] += q * r[src]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
                    dirty = dirty or a[i][t] != 0
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
                    dirty = dirty or a[t][j] != 0
            if dirty:
                # Move the smallest leftover in the pivot row/column into place.
                cand = [(abs(a[i][t]), i, t) for i in range(t + 1, m) if a[i][t]]
                cand += [(abs(a[t][j]), t, j) for j in range(t + 1, n) if a[t][j]]
                _, i, j = min(cand)
                if j == t:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            U[t] = [-x for x in U[t]]
        t += 1

    return SmithDecomposition(
        U=IntMatrix.from_rows(U, m),
        D=IntMatrix.from_rows(a, n),
        V=IntMatrix.from_rows(V, n),
        rows=m,
        cols=n,
    )


# ---------------------------------------------------------------------------
# Abelian groups


def _canonical_from_orders(orders: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    """Invariant-factor form of a direct sum of cyclic groups (0 means Z)."""
    free = 0
    finite: list[int] = []
    for o in orders:
        o = _check_int(o)
        if o < 0:
            raise ValueError("cyclic orders must be non-negative")
        if o == 0:
            free += 1
        elif o > 1:
            finite.append(o)
    if not finite:
        return free, ()
    snf = smith_normal_form(IntMatrix.diagonal(finite))
    return free, tuple(d for d in snf.diagonal if d > 1)


@dataclass(frozen=True)
class FGAbGroup:
    """Finitely generated abelian group ``Z^free_rank ⊕ Z/d_1 ⊕ ... ⊕ Z/d_k``.

    The torsion list is kept in invariant-factor form (each ``d_i >= 2`` and
    ``d_i | d_{i+1}``), so two groups are isomorphic exactly when they compare
    equal.
    """

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")
        object.__setattr__(self, "torsion", tuple(self.torsion))
        prev = 1
        for d in self.torsion:
            _check_int(d)
            if d < 2 or d % prev:
                raise ValueError(f"torsion {self.torsion} is not an invariant-factor chain")
            prev = d

    @classmethod
    def from_orders(cls, orders: Iterable[int]) -> "FGAbGroup":
        """Canonical form of ``⊕ Z/o`` where ``o == 0`` stands for ``Z``."""
        free, tors = _canonical_from_orders(orders)
        return cls(free, tors)

    @classmethod
    def Z(cls, rank: int = 1) -> "FGAbGroup":
        return cls(rank, ())

    @classmethod
    def cyclic(cls, n: int) -> "FGAbGroup":
        return cls.from_orders([n])

    @classmethod
    def trivial(cls) -> "FGAbGroup":
        return cls(0, ())

    def direct_sum(self, other: "FGAbGroup") -> "FGAbGroup":
        return FGAbGroup.from_orders([0] * (self.free_rank + other.free_rank) + list(self.torsion + other.torsion))

    def __add__(self, other: "FGAbGroup") -> "FGAbGroup":
        return self.direct_sum(other)

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def order(self) -> int | None:
        """Group order, or ``None`` for infinite groups."""
        if self.free_rank:
            return None
        out = 1
        for d in self.torsion:
            out *= d
        return out

    @property
    def torsion_order(self) -> int:
        out = 1
        for d in self.torsion:
            out *= d
        return out

    def presentation(self) -> "CyclicSum":
        """The standard generators: free summands first, then torsion."""
        return CyclicSum((0,) * self.free_rank + self.torsion)

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}

    @classmethod
    def from_json(cls, obj: dict) -> "FGAbGroup":
        return cls(int(obj["free_rank"]), tuple(int(d) for d in obj["torsion"]))

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts += [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class CyclicSum:
    """A direct sum of cyclic groups with a fixed order of generators.

    ``orders[i] == 0`` marks an infinite cyclic summand.  Unlike
    :class:`FGAbGroup` this keeps the summands as given, which is what a
    homomorphism matrix needs.
    """

    orders: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(self.orders))
        for o in self.orders:
            _check_int(o)
            if o < 0 or o == 1:
                raise ValueError(f"cyclic order must be 0 (for Z) or at least 2, got {o}")

    @classmethod
    def of(cls, group: "FGAbGroup | CyclicSum | Sequence[int]") -> "CyclicSum":
        if isinstance(group, CyclicSum):
            return group
        if isinstance(group, FGAbGroup):
            return group.presentation()
        return cls(tuple(group))

    def __len__(self) -> int:
        return len(self.orders)

    def canonical(self) -> FGAbGroup:
        return FGAbGroup.from_orders(self.orders)

    def reduce(self, vector: Sequence[int]) -> tuple[int, ...]:
        if len(vector) != len(self.orders):
            raise ValueError("vector length does not match the number of generators")
        return tuple(v % o if o else v for v, o in zip(vector, self.orders))

    def relations(self) -> IntMatrix:
        """Columns ``o_i e_i`` for the finite summands."""
        finite = [i for i, o in enumerate(self.orders) if o]
        data = [[0] * len(finite) for _ in self.orders]
        for c, i in enumerate(finite):
            data[i][c] = self.orders[i]
        return IntMatrix.from_rows(data, len(finite)) if self.orders else IntMatrix.zeros(0, len(finite))

    def direct_sum(self, other: "CyclicSum") -> "CyclicSum":
        return CyclicSum(self.orders + other.orders)

    def to_json(self) -> list[int]:
        return list(self.orders)


@dataclass(frozen=True)
class GroupHom:
    """A homomorphism between direct sums of cyclic groups.

    ``matrix[i, j]`` is the coefficient of codomain generator ``i`` in the
    image of domain generator ``j``.  Entries in rows of finite order ``d``
    are stored reduced mod ``d``.
    """

    domain: CyclicSum
    codomain: CyclicSum
    matrix: IntMatrix

    def __post_init__(self) -> None:
        dom = CyclicSum.of(self.domain)
        cod = CyclicSum.of(self.codomain)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "codomain", cod)
        M = self.matrix
        if M.shape != (len(cod), len(dom)):
            raise ValueError(f"matrix shape {M.shape} does not match {len(cod)}x{len(dom)}")
        rows = M.to_rows()
        for i, o in enumerate(cod.orders):
            if o:
                rows[i] = [x % o for x in rows[i]]
        for j, n in enumerate(dom.orders):
            if not n:
                continue
            for i, o in enumerate(cod.orders):
                x = rows[i][j]
                if o == 0 and x != 0:
                    raise ValueError(f"generator {j} has order {n} but maps to a free generator")
                if o and (n * x) % o:
                    raise ValueError(f"entry ({i},{j}) is not well defined: {n}*{x} != 0 mod {o}")
        object.__setattr__(self, "matrix", IntMatrix.from_rows(rows, len(dom)))

    @classmethod
    def zero(cls, domain, codomain) -> "GroupHom":
        dom, cod = CyclicSum.of(domain), CyclicSum.of(codomain)
        return cls(dom, cod, IntMatrix.zeros(len(cod), len(dom)))

    @classmethod
    def identity(cls, group) -> "GroupHom":
        g = CyclicSum.of(group)
        return cls(g, g, IntMatrix.identity(len(g)))

    @classmethod
    def from_rows(cls, domain, codomain, rows: Sequence[Sequence[int]]) -> "GroupHom":
        dom = CyclicSum.of(domain)
        return cls(dom, CyclicSum.of(codomain), IntMatrix.from_rows(rows, len(dom)))

    def __call__(self, vector: Sequence[int]) -> tuple[int, ...]:
        return self.codomain.reduce(self.matrix.apply(self.domain.reduce(vector)))

    def compose(self, inner: "GroupHom") -> "GroupHom":
        """``self ∘ inner``."""
        if inner.codomain != self.domain:
            raise ValueError("homomorphisms are not composable")
        return GroupHom(inner.domain, self.codomain, self.matrix @ inner.matrix)

    def __matmul__(self, inner: "GroupHom") -> "GroupHom":
        return self.compose(inner)

    def __add__(self, other: "GroupHom") -> "GroupHom":
        self._check_parallel(other)
        return GroupHom(self.domain, self.codomain, self.matrix + other.matrix)

    def __sub__(self, other: "GroupHom") -> "GroupHom":
        self._check_parallel(other)
        return GroupHom(self.domain, self.codomain, self.matrix - other.matrix)

    def _check_parallel(self, other: "GroupHom") -> None:
        if self.domain != other.domain or self.codomain != other.codomain:
            raise ValueError("homomorphisms have different domain or codomain")

    def is_zero(self) -> bool:
        return self.matrix.is_zero()

    def to_json(self) -> dict:
        return {
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
            "matrix": self.matrix.to_rows(),
        }


# ---------------------------------------------------------------------------
# kernels, cokernels, linear systems


def _group_from_snf(snf: SmithDecomposition, ambient_rank: int) -> FGAbGroup:
    return FGAbGroup.from_orders([0] * (ambient_rank - snf.rank) + [d for d in snf.invariant_factors if d > 1])


def cokernel(f: GroupHom) -> FGAbGroup:
    """``codomain / image(f)`` in canonical form."""
    rel = IntMatrix.hstack([f.matrix, f.codomain.relations()], rows=len(f.codomain))
    return _group_from_snf(smith_normal_form(rel), len(f.codomain))


def _lattice_basis(gens: IntMatrix) -> IntMatrix:
    """A basis (as columns) of the sublattice of Z^n spanned by the columns."""
    snf = smith_normal_form(gens)
    r = snf.rank
    # gens = U^{-1} D V^{-1}; the lattice is U^{-1} D Z^r.
    Uinv = unimodular_inverse(snf.U)
    cols = [[Uinv[i, k] * snf.diagonal[k] for k in range(r)] for i in range(gens.rows)]
    return IntMatrix.from_rows(cols, r) if gens.rows else IntMatrix.zeros(0, r)


def unimodular_inverse(U: IntMatrix) -> IntMatrix:
    snf = smith_normal_form(U)
    if snf.diagonal != (1,) * U.rows:
        raise ValueError("matrix is not unimodular")
    # U' U V = I  =>  U^{-1} = V U'
    return snf.V @ snf.U


def integer_kernel(M: IntMatrix) -> IntMatrix:
    """Columns spanning ``{x in Z^n : M x = 0}``."""
    snf = smith_normal_form(M)
    r = snf.rank
    idx = list(range(r, M.cols))
    return snf.V.submatrix(list(range(M.cols)), idx)


def solve_integer(A: IntMatrix, b: Sequence[int]) -> tuple[int, ...] | None:
    """An integer solution of ``A x = b``, or ``None`` if there is none."""
    if len(b) != A.rows:
        raise ValueError("right-hand side has the wrong length")
    snf = smith_normal_form(A)
    c = snf.U.apply(b)
    y = [0] * A.cols
    for i, ci in enumerate(c):
        d = snf.diagonal[i] if i < len(snf.diagonal) else 0
        if d == 0:
            if ci != 0:
                return None
        else:
            if ci % d:
                return None
            y[i] = ci // d
    return snf.V.apply(y)


def in_subgroup(group, generators: Sequence[Sequence[int]], vector: Sequence[int]) -> bool:
    """Whether ``vector`` lies in the subgroup spanned by ``generators``."""
    g = CyclicSum.of(group)
    gens = IntMatrix.from_rows(list(zip(*generators)), len(generators)) if generators else IntMatrix.zeros(len(g), 0)
    A = IntMatrix.hstack([gens, g.relations()], rows=len(g))
    return solve_integer(A, list(vector)) is not None


def kernel(f: GroupHom) -> FGAbGroup:
    """``ker(f)`` in canonical form."""
    n = len(f.domain)
    rel_cod = f.codomain.relations()
    combined = IntMatrix.hstack([f.matrix, rel_cod], rows=len(f.codomain))
    K = integer_kernel(combined)
    proj = K.submatrix(list(range(n)), list(range(K.cols)))
    B = _lattice_basis(proj)  # basis of {x : f(x) = 0 mod relations}
    rel_dom = f.domain.relations()
    coords = []
    for j in range(rel_dom.cols):
        w = solve_integer(B, rel_dom.col(j))
        if w is None:
            raise ArithmeticError("domain relation outside the kernel lattice")
        coords.append(w)
    W = IntMatrix.from_rows(list(zip(*coords)), len(coords)) if coords else IntMatrix.zeros(B.cols, 0)
    return _group_from_snf(smith_normal_form(W), B.cols)


def image(f: GroupHom) -> FGAbGroup:
    """``image(f)``, computed as ``domain / ker`` would be; here via the codomain."""
    rel = f.codomain.relations()
    full = IntMatrix.hstack([f.matrix, rel], rows=len(f.codomain))
    # image ≅ (im M + R) / R
    B = _lattice_basis(full)
    coords = []
    for j in range(rel.cols):
        w = solve_integer(B, rel.col(j))
        coords.append(w)
    W = IntMatrix.from_rows(list(zip(*coords)), len(coords)) if coords else IntMatrix.zeros(B.cols, 0)
    return _group_from_snf(smith_normal_form(W), B.cols)


# ---------------------------------------------------------------------------
# splitting a homomorphism into free and torsion blocks


Split = tuple[int, Sequence[int]]


def _split_orders(split: Split) -> tuple[int, ...]:
    free, tors = split
    if free < 0:
        raise ValueError("free count must be non-negative")
    return (0,) * free + tuple(tors)


def decompose_gamma(g: GroupHom, src_split: Split, dst_split: Split) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Split ``g: Z^I ⊕ T → Z^J ⊕ T'`` into ``(gamma_hat, tau, t)``.

    ``gamma_hat`` is the free-to-free block, ``tau`` the torsion-to-torsion
    block (reduced mod the target orders) and ``t`` the free-to-torsion block.
    Each split is ``(number of free summands, torsion orders)`` and has to
    match the generator order of the corresponding group.
    """
    if g.domain.orders != _split_orders(src_split):
        raise ValueError(f"source split {src_split} does not match domain {g.domain.orders}")
    if g.codomain.orders != _split_orders(dst_split):
        raise ValueError(f"target split {dst_split} does not match codomain {g.codomain.orders}")
    fi, fj = src_split[0], dst_split[0]
    n, m = len(g.domain), len(g.codomain)
    M = g.matrix
    gamma_hat = M.submatrix(range(fj), range(fi))
    tau = M.submatrix(range(fj, m), range(fi, n))
    t = M.submatrix(range(fj, m), range(fi))
    return gamma_hat, tau, t


def reassemble_gamma(gamma_hat: IntMatrix, tau: IntMatrix, t: IntMatrix, src_split: Split, dst_split: Split) -> GroupHom:
    """Inverse of :func:`decompose_gamma`."""
    fi, fj = src_split[0], dst_split[0]
    ki, kj = len(src_split[1]), len(dst_split[1])
    if gamma_hat.shape != (fj, fi) or tau.shape != (kj, ki) or t.shape != (kj, fi):
        raise ValueError("block shapes do not match the splits")
    top = IntMatrix.hstack([gamma_hat, IntMatrix.zeros(fj, ki)], rows=fj)
    bottom = IntMatrix.hstack([t, tau], rows=kj)
    M = IntMatrix.vstack([top, bottom], cols=fi + ki)
    return GroupHom(CyclicSum(_split_orders(src_split)), CyclicSum(_split_orders(dst_split)), M)

