"""Subhomogeneous building blocks and their K-theory.

A block is the pullback

    A = {(f, a) in C([0,1], E) ⊕ F : f(0) = β₀(a), f(1) = β₁(a)}

where ``E = ⊕_p M_{E_p}`` and ``F`` is a sum of matrix algebras and corners
``P·M(C(Z))·P`` over catalog spaces.  The boundary maps are recorded by
multiplicities (how many copies of the ``i``-th summand of ``F`` sit on the
diagonal of ``E_p``) together with a conjugating permutation.

K-theory comes from the extension ``0 → SE → A → F → 0``.  Its index map
``K₀(F) → K₀(E)`` is ``(β₀)_* − (β₁)_*``, which only sees the rank of a
class at the basepoint of each space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from . import cw
from .intlin import CyclicSum, FGAbGroup, GroupHom, IntMatrix, cokernel, kernel

__all__ = [
    "MatrixSummand",
    "SpaceSummand",
    "BoundaryMap",
    "BlockAlgebra",
    "SixTermData",
    "six_term",
    "k_theory",
    "check_unital",
    "rank_audit",
    "jiang_su_block",
    "razak_block",
    "z0_block",
]


@dataclass(frozen=True)
class MatrixSummand:
    """A full matrix algebra ``M_size``."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("matrix size must be positive")

    def k_presentations(self) -> tuple[CyclicSum, CyclicSum]:
        return CyclicSum((0,)), CyclicSum(())

    def to_json(self) -> dict:
        return {"kind": "matrix", "size": self.size}


@dataclass(frozen=True)
class SpaceSummand:
    """The corner ``P·M_∞(C(space))·P`` cut down by a projection of rank ``rank``.

    ``bundles`` optionally records ``P`` as a sum of line bundles; when it is
    given its length must equal ``rank``.
    """

    space: cw.CWComplex
    rank: int
    bundles: tuple[cw.LineBundleClass, ...] = ()

    def __post_init__(self) -> None:
        if not self.space.catalog:
            raise ValueError("spaces in a building block must come from the catalog")
        if self.rank < 1:
            raise ValueError("projection rank must be positive")
        if cw.cohomology(self.space, 0) != FGAbGroup.Z(1):
            raise ValueError("space summands must be connected")
        object.__setattr__(self, "bundles", tuple(self.bundles))
        if self.bundles and len(self.bundles) != self.rank:
            raise ValueError("number of line bundles differs from the rank")
        if any(b.base != self.space for b in self.bundles):
            raise ValueError("line bundle over a different space")

    @property
    def size(self) -> int:
        return self.rank

    def k_presentations(self) -> tuple[CyclicSum, CyclicSum]:
        return cw.k_presentations(self.space)

    def projection_class(self) -> tuple[int, ...]:
        """K⁰ class of ``P``: the sum of its line bundle classes."""
        if not self.bundles:
            K0, _ = self.k_presentations()
            return K0.reduce((self.rank,) + (0,) * (len(K0) - 1))
        K0, _ = self.k_presentations()
        total = [0] * len(K0)
        for b in self.bundles:
            total = [x + y for x, y in zip(total, b.k0_class())]
        return K0.reduce(total)

    def to_json(self) -> dict:
        return {
            "kind": "space",
            "space": self.space.name,
            "rank": self.rank,
            "bundles": [list(b.chern) for b in self.bundles],
        }


Summand = Union[MatrixSummand, SpaceSummand]


@dataclass(frozen=True)
class BoundaryMap:
    """``β_t``: ``mult[p][i]`` copies of summand ``i`` inside ``E_p``, then conjugated.

    ``perms[p]`` is a permutation of ``range(E_p)``; an empty tuple means the
    identity.
    """

    mult: tuple[tuple[int, ...], ...]
    perms: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mult", tuple(tuple(r) for r in self.mult))
        object.__setattr__(self, "perms", tuple(tuple(p) for p in self.perms))
        for row in self.mult:
            if any(m < 0 for m in row):
                raise ValueError("multiplicities must be non-negative")

    def used(self, sizes: Sequence[int]) -> list[int]:
        """Matrix size occupied in each ``E_p``."""
        return [sum(m * s for m, s in zip(row, sizes)) for row in self.mult]

    def to_json(self) -> dict:
        return {"mult": [list(r) for r in self.mult], "perms": [list(p) for p in self.perms]}


@dataclass(frozen=True)
class BlockAlgebra:
    """The data ``(E, F, β₀, β₁)`` of a building block."""

    E: tuple[int, ...]
    F: tuple[Summand, ...]
    beta0: BoundaryMap
    beta1: BoundaryMap
    name: str = "A"
    order_unit: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "E", tuple(self.E))
        object.__setattr__(self, "F", tuple(self.F))
        if any(e < 1 for e in self.E):
            raise ValueError("E summands must have positive size")
        sizes = self.sizes
        for t, beta in ((0, self.beta0), (1, self.beta1)):
            if len(beta.mult) != len(self.E) or any(len(r) != len(self.F) for r in beta.mult):
                raise ValueError(f"β{t} multiplicities must be a {len(self.E)}x{len(self.F)} matrix")
            for p, used in enumerate(beta.used(sizes)):
                if used > self.E[p]:
                    raise ValueError(f"β{t} uses size {used} > {self.E[p]} in E summand {p}")
            if beta.perms:
                if len(beta.perms) != len(self.E):
                    raise ValueError(f"β{t} needs one permutation per E summand")
                for p, perm in enumerate(beta.perms):
                    if sorted(perm) != list(range(self.E[p])):
                        raise ValueError(f"β{t} permutation {p} is not a permutation of {self.E[p]} points")

    @property
    def sizes(self) -> list[int]:
        return [s.size for s in self.F]

    def delta_hat(self) -> IntMatrix:
        """``(β₀)_* − (β₁)_*`` on ranks: ``Z^F → Z^E``."""
        rows = [[a - b for a, b in zip(r0, r1)] for r0, r1 in zip(self.beta0.mult, self.beta1.mult)]
        return IntMatrix.from_rows(rows, len(self.F))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "E": list(self.E),
            "F": [s.to_json() for s in self.F],
            "beta0": self.beta0.to_json(),
            "beta1": self.beta1.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BlockAlgebra":
        F: list[Summand] = []
        for s in obj["F"]:
            if s["kind"] == "matrix":
                F.append(MatrixSummand(int(s["size"])))
            elif s["kind"] == "space":
                X = cw.catalog_space(s["space"])
                bundles = tuple(cw.LineBundleClass(X, tuple(c)) for c in s.get("bundles", []))
                F.append(SpaceSummand(X, int(s["rank"]), bundles))
            else:
                raise ValueError(f"unknown summand kind {s['kind']!r}")

        def beta(b: dict) -> BoundaryMap:
            return BoundaryMap(tuple(map(tuple, b["mult"])), tuple(map(tuple, b.get("perms", []))))

        return cls(tuple(obj["E"]), tuple(F), beta(obj["beta0"]), beta(obj["beta1"]), name=obj.get("name", "A"))


@dataclass(frozen=True)
class SixTermData:
    """The groups and index map of ``0 → SE → A → F → 0``."""

    K0F: CyclicSum
    K1F: CyclicSum
    K0E: CyclicSum
    delta: GroupHom


def six_term(A: BlockAlgebra) -> SixTermData:
    pres = [s.k_presentations() for s in A.F]
    K0F = CyclicSum(tuple(o for p0, _ in pres for o in p0.orders))
    K1F = CyclicSum(tuple(o for _, p1 in pres for o in p1.orders))
    K0E = CyclicSum((0,) * len(A.E))
    # rank at the basepoint: the H⁰ coordinate of each summand
    dh = A.delta_hat()
    cols = []
    for i, (p0, _) in enumerate(pres):
        cols.append(dh.col(i))
        cols += [(0,) * len(A.E)] * (len(p0) - 1)
    rows = [list(r) for r in zip(*cols)] if cols else [[] for _ in A.E]
    delta = GroupHom(K0F, K0E, IntMatrix.from_rows(rows, len(K0F)))
    return SixTermData(K0F, K1F, K0E, delta)


def k_theory(A: BlockAlgebra) -> tuple[FGAbGroup, FGAbGroup]:
    """``(K₀(A), K₁(A))``.

    ``K₀(A) = ker δ``.  ``K₁(A)`` is an extension of ``K₁(F)`` by
    ``coker δ``; it splits because the boundary maps factor through
    evaluation at basepoints, so the reduced parts of the space summands
    form a direct summand at the level of K-theory.
    """
    d = six_term(A)
    K0 = kernel(d.delta)
    K1 = cokernel(d.delta).direct_sum(d.K1F.canonical())
    return K0, K1


def check_unital(A: BlockAlgebra) -> bool:
    """Whether both boundary maps fill every ``E_p`` exactly."""
    sizes = A.sizes
    return all(used == e for beta in (A.beta0, A.beta1) for used, e in zip(beta.used(sizes), A.E))


def rank_audit(A: BlockAlgebra) -> dict:
    """Rank–nullity bookkeeping for the index map."""
    d = six_term(A)
    rk_F = d.K0F.canonical().free_rank
    rk_ker = kernel(d.delta).free_rank
    rk_im = d.delta.matrix.rank()
    return {"rank_K0F": rk_F, "rank_ker": rk_ker, "rank_im": rk_im, "ok": rk_F == rk_ker + rk_im}


# ---------------------------------------------------------------------------
# the blocks of the three model algebras


def jiang_su_block(p: int, q: int) -> BlockAlgebra:
    """Dimension-drop block: ``E = M_pq``, ``F = M_p ⊕ M_q``, ``β₀ = x⊗1``, ``β₁ = 1⊗y``."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    return BlockAlgebra(
        (p * q,),
        (MatrixSummand(p), MatrixSummand(q)),
        BoundaryMap(((q, 0),)),
        BoundaryMap(((0, p),)),
        name=f"I[{p},{q}]",
    )


def razak_block(a: int, b: int) -> BlockAlgebra:
    """``E = M_{(a+1)b}``, ``F = M_b``; ``a`` copies at 0 (zero padded), ``a+1`` at 1."""
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive")
    return BlockAlgebra(
        ((a + 1) * b,),
        (MatrixSummand(b),),
        BoundaryMap(((a,),)),
        BoundaryMap(((a + 1,),)),
        name=f"W[{a},{b}]",
    )


def z0_block(a: int, b: int) -> BlockAlgebra:
    """``E = M_{(2a+2)b}``, ``F = M_b ⊕ M_b``; ``a`` copies of each at 0, ``a+1`` at 1."""
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive")
    return BlockAlgebra(
        ((2 * a + 2) * b,),
        (MatrixSummand(b), MatrixSummand(b)),
        BoundaryMap(((a, a),)),
        BoundaryMap(((a + 1, a + 1),)),
        name=f"Z0[{a},{b}]",
    )
