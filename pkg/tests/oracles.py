"""Independent brute-force computations used to cross-check the library.

Nothing here calls the Smith normal form.  A finitely generated abelian
group ``G`` is pinned down by its free rank together with the counts
``|Hom(G, Z/k)|`` for small ``k``, and those counts can be found by plain
enumeration of solutions of congruences.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd, prod
from typing import Sequence

from stagekit.intlin import FGAbGroup


def rational_det(rows: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by elimination over Q."""
    M = [[Fraction(x) for x in r] for r in rows]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if M[i][c] != 0), None)
        if pivot is None:
            return 0
        if pivot != c:
            M[c], M[pivot] = M[pivot], M[c]
            det = -det
        det *= M[c][c]
        for i in range(c + 1, n):
            f = M[i][c] / M[c][c]
            M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return int(det)


def rational_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank over Q by Gaussian elimination on fractions."""
    M = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        pivot = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        for i in range(len(M)):
            if i != rank and M[i][c] != 0:
                f = M[i][c] / M[rank][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def hom_count_formula(G: FGAbGroup, k: int) -> int:
    """``|Hom(G, Z/k)|`` read off the invariant factors."""
    return k ** G.free_rank * prod(gcd(d, k) for d in G.torsion)


def cokernel_hom_count(rows: Sequence[Sequence[int]], n: int, k: int) -> int:
    """``|Hom(Z^n / span(columns of rows), Z/k)|`` by enumerating ``(Z/k)^n``.

    ``rows`` is an ``n × m`` relation matrix; a homomorphism is a vector
    ``y`` with ``y · column ≡ 0 (mod k)`` for every column.
    """
    cols = list(zip(*rows)) if rows and rows[0] else []
    count = 0
    for y in itertools.product(range(k), repeat=n):
        if all(sum(a * b for a, b in zip(y, col)) % k == 0 for col in cols):
            count += 1
    return count


def cokernel_matches(rows: Sequence[Sequence[int]], n: int, G: FGAbGroup, ks: Sequence[int]) -> bool:
    """Whether ``G`` agrees with the cokernel on free rank and on every Hom count."""
    free = n - (rational_rank(rows) if rows and rows[0] else 0)
    if free != G.free_rank:
        return False
    return all(cokernel_hom_count(rows, n, k) == hom_count_formula(G, k) for k in ks)


def cohomology_oracle(X, k: int, ks: Sequence[int] = range(1, 13)) -> tuple[int, dict[int, int]]:
    """Free rank of ``H^k(X)`` and the counts ``|Hom(Tor H^k, Z/j)|``.

    Works directly with the cellular cochains: the free rank is
    ``dim ker δ_k − rank δ_{k-1}``, and the torsion of ``H^k`` is the torsion
    of ``C^k / im δ_{k-1}`` because ``C^k / ker δ_k`` is free.
    """
    n = X.cells[k]
    d_out = X.boundary[k + 1].to_rows() if k + 1 <= 3 else []  # transpose is δ_k
    d_in = X.boundary[k].to_rows() if k >= 1 else []  # transpose is δ_{k-1}
    rank_out = rational_rank(d_out) if d_out and d_out[0] else 0
    delta_in = [list(r) for r in zip(*d_in)] if d_in and d_in[0] else []
    rank_in = rational_rank(delta_in) if delta_in else 0
    free = n - rank_out - rank_in
    coker_free = n - rank_in
    counts = {}
    for j in ks:
        total = cokernel_hom_count(delta_in, n, j) if delta_in else j ** n
        counts[j] = total // j ** coker_free
    return free, counts


def torsion_counts(G: FGAbGroup, ks: Sequence[int] = range(1, 13)) -> dict[int, int]:
    return {j: prod(gcd(d, j) for d in G.torsion) for j in ks}


def hadamard_bound(rows: Sequence[Sequence[int]]) -> int:
    """Upper bound for the absolute value of any maximal minor (product of row norms)."""
    out = 1
    for r in rows:
        out *= max(1, int(sum(x * x for x in r) ** 0.5) + 1)
    return out


def mapping_cone_k_theory(A) -> dict:
    """K-groups of a building block from the mapping cone of the index map.

    ``K₀(F) = Z^r ⊕ T`` maps to ``K₀(E) = Z^e`` through the rank at the
    basepoint, so torsion lies in the kernel.  The kernel is found by
    enumerating ``T`` (which must be small) and taking the rational nullity
    on the free part; the cokernel by Hom counting up to the Hadamard bound,
    which exceeds its torsion order.
    """
    from stagekit import cw

    free_cols: list[list[int]] = []
    torsion: list[int] = []
    k1_free = 0
    k1_torsion: list[int] = []
    for idx, s in enumerate(A.F):
        free_cols.append([r0[idx] - r1[idx] for r0, r1 in zip(A.beta0.mult, A.beta1.mult)])
        if hasattr(s, "space"):
            G2 = cw.cohomology(s.space, 2)
            free_cols += [[0] * len(A.E)] * G2.free_rank
            torsion += list(G2.torsion)
            for deg in (1, 3):
                G = cw.cohomology(s.space, deg)
                k1_free += G.free_rank
                k1_torsion += list(G.torsion)
    if prod(torsion) > 1000:
        raise ValueError("torsion part too large for enumeration")
    rows = [list(r) for r in zip(*free_cols)] if free_cols else []
    e = len(A.E)
    rk = rational_rank(rows) if rows else 0
    bound = max(12, prod(torsion), prod(k1_torsion), hadamard_bound(rows))
    ks = range(1, bound + 1)
    elements = list(itertools.product(*[range(d) for d in torsion]))
    k0_counts = {j: sum(all((j * x) % d == 0 for x, d in zip(el, torsion)) for el in elements)
                 for j in ks}
    coker_free = e - rk
    coker_counts = {j: cokernel_hom_count(rows, e, j) // j ** coker_free for j in ks}
    k1_counts = {j: coker_counts[j] * prod(gcd(d, j) for d in k1_torsion) for j in ks}
    return {
        "K0_free": len(free_cols) - rk,
        "K0_torsion_counts": k0_counts,
        "K1_free": coker_free + k1_free,
        "K1_torsion_counts": k1_counts,
    }


def agrees_with_oracle(K0: FGAbGroup, K1: FGAbGroup, oracle: dict) -> bool:
    ks = list(oracle["K0_torsion_counts"])
    return (
        K0.free_rank == oracle["K0_free"]
        and torsion_counts(K0, ks) == oracle["K0_torsion_counts"]
        and K1.free_rank == oracle["K1_free"]
        and torsion_counts(K1, ks) == oracle["K1_torsion_counts"]
    )


def brute_force_order(orders: Sequence[int], element: Sequence[int]) -> int:
    """Order of ``element`` in ``⊕ Z/orders`` by repeated addition (all orders positive)."""
    x = [0] * len(orders)
    for n in range(1, prod(orders) + 1):
        x = [(a + b) % o for a, b, o in zip(x, element, orders)]
        if not any(x):
            return n
    raise AssertionError("unreachable: a finite group element has finite order")
