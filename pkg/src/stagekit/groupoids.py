"""Finite-stage groupoid models for the Jiang-Su, Razak-Jacelon and Z₀ towers.

Stage ``n`` is a finite set of strands ``X(n)``, each a copy of ``[0,1]``.
At ``t = 0`` and ``t = 1`` the strand ends are glued in *classes*; inside a
class each end has a *position*.  The quotient of ``[0,1] × X(n)`` by the
gluing is the unit space, a finite graph whose vertices are classes and
whose edges are strands.  Arrows at an end connect ends of different
classes sitting at the same position; in the interior all strands are
connected.

For the Jiang-Su tower the ``t = 0`` and ``t = 1`` classes are separate
vertices.  For the other two towers a class is a single vertex receiving
ends from both times ("paired" gluing), and some ``t = 0`` ends are missing
altogether (they are *inactive*; in the unit-space graph each becomes a
leaf).

Stage ``n+1`` has strands ``X(n) × Y(n)``, numbered ``x·d + (y-1)``, and the
connecting map sends ``(t, x, y)`` to ``(λ_y(t), x)`` where ``λ_y`` is one of
``t/2``, ``1/2`` or ``(t+1)/2`` according to where ``y`` falls between the
two breakpoints.  The gluing of stage ``n+1`` is built from stage ``n`` so
that the connecting map descends: an end mapped to a glued end of stage
``n`` joins a class over that parent class, an end mapped to ``1/2`` joins
a class over the strand ``x``.  Inside such a group ends are ranked and cut
into consecutive chunks of the class size.

Large stages are not materialized: their labels are computed on demand from
the previous (materialized) stage, and the checks switch from exhaustive to
sampled.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .intlin import CyclicSum, GroupHom, IntMatrix, smith_normal_form

__all__ = [
    "VARIANTS",
    "MATERIALIZE_LIMIT",
    "StageParams",
    "Breakpoints",
    "StageGroupoid",
    "ConnectingMap",
    "UnitSpaceGraph",
    "CheckResult",
    "HypothesisReport",
    "H1Transfer",
    "TruncatedTower",
    "generate_params",
    "check_params",
    "build_stage",
    "build_connecting",
    "identity_connecting",
    "unit_space",
    "check_morphism_hypotheses",
    "h1_transfer",
    "tower_truncate",
    "corrupt_gluing",
    "format_key",
    "fibred_components",
    "refinement_audit",
]

VARIANTS = ("jiang-su", "razak", "z0")
MATERIALIZE_LIMIT = 250_000
HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class Breakpoints:
    """``λ_y`` is ``t/2`` for ``y <= lo``, ``1/2`` for ``lo < y <= hi``, ``(t+1)/2`` above."""

    lo: int
    hi: int
    d: int

    def kind(self, y: int) -> str:
        if y <= self.lo:
            return "L"
        if y <= self.hi:
            return "M"
        return "U"

    def counts(self) -> dict[str, int]:
        return {"L": self.lo, "M": self.hi - self.lo, "U": self.d - self.hi}

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "d": self.d}


# λ as an affine map t ↦ slope·t + offset
LAMBDA = {
    "L": (HALF, Fraction(0)),
    "M": (Fraction(0), HALF),
    "U": (HALF, HALF),
    "ID": (Fraction(1), Fraction(0)),
}


def lam(kind: str, t: Fraction | int) -> Fraction:
    a, b = LAMBDA[kind]
    return a * t + b


@dataclass(frozen=True)
class StageParams:
    """Stage sequences of one tower.

    ``values[n-1]`` is ``(p_n, q_n)`` for Jiang-Su, ``(a_n, b_n)`` for the
    Razak-Jacelon tower and ``(a_n, b_n, h_n)`` for Z₀.  ``seed`` selects the
    gluing: ``None`` keeps every group in lexicographic order, an integer
    shuffles the order in which ends are ranked.
    """

    variant: str
    values: tuple[tuple[int, ...], ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        object.__setattr__(self, "values", tuple(tuple(v) for v in self.values))
        width = 2 if self.variant != "z0" else 3
        if not self.values or any(len(v) != width or min(v) < 1 for v in self.values):
            raise ValueError(f"{self.variant} stages need positive {width}-tuples")

    @property
    def stages(self) -> int:
        return len(self.values)

    @property
    def paired(self) -> bool:
        return self.variant != "jiang-su"

    def _check_stage(self, n: int) -> tuple[int, ...]:
        if not 1 <= n <= self.stages:
            raise ValueError(f"stage {n} outside 1..{self.stages}")
        return self.values[n - 1]

    def strand_count(self, n: int) -> int:
        v = self._check_stage(n)
        if self.variant == "jiang-su":
            return v[0] * v[1]
        if self.variant == "razak":
            return (v[0] + 1) * v[1]
        return (2 * v[0] + 2) * v[1]

    def class_size(self, n: int, t: int) -> int:
        """Number of active ends per class at time ``t``."""
        v = self._check_stage(n)
        if self.variant == "jiang-su":
            return v[1] if t == 0 else v[0]
        return v[0] if t == 0 else v[0] + 1

    def class_count(self, n: int) -> int:
        """Number of gluing vertices (both times together for Jiang-Su)."""
        v = self._check_stage(n)
        if self.variant == "jiang-su":
            return v[0] + v[1]
        if self.variant == "razak":
            return v[1]
        return 2 * v[1]

    def inactive_count(self, n: int) -> int:
        v = self._check_stage(n)
        return {"jiang-su": 0, "razak": v[1], "z0": 2 * v[1]}[self.variant]

    def breakpoints(self, n: int) -> Breakpoints:
        """Breakpoints of the map from stage ``n+1`` to stage ``n``."""
        v = self._check_stage(n)
        w = self._check_stage(n + 1)
        if self.variant == "jiang-su":
            p, q = v
            p1, q1 = w
            d = (p1 // p) * (q1 // q)
            r0, r1 = d % q1, d % p1
            return Breakpoints(r0, d - r1, d)
        if self.variant == "razak":
            a1 = w[0]
            return Breakpoints(a1, a1 + 1, 2 * a1)
        a, _, h = v
        a1 = w[0]
        d = (2 * a1 + 2) * h + 2 * a * h + 1
        return Breakpoints(2 * a * h + 2 * h + 1, (2 * a1 + 2) * h, d)

    def to_json(self) -> dict:
        return {"variant": self.variant, "values": [list(v) for v in self.values], "seed": self.seed}


def _js_next(p: int, q: int, search_limit: int) -> tuple[int, int]:
    """Smallest admissible ``(d₀, d₁)``, ordered by ``d₀ + d₁`` then ``d₀``."""
    if p == 1 or q == 1:
        raise ValueError("a Jiang-Su step needs p, q >= 2; otherwise one remainder is always zero")
    lo0, lo1 = 2 * q + 1, 2 * p + 1
    for total in range(lo0 + lo1, lo0 + lo1 + search_limit):
        for d0 in range(lo0, total - lo1 + 1):
            d1 = total - d0
            p1, q1 = p * d0, q * d1
            if gcd(p1, q1) != 1:
                continue
            d = d0 * d1
            r0, r1 = d % q1, d % p1
            if r0 == 0 or r1 == 0 or r0 + r1 >= d:
                continue
            return d0, d1
    raise ValueError(f"no admissible Jiang-Su step from ({p},{q}) within search limit {search_limit}")


def generate_params(variant: str, stages: int, seed: int | None = None,
                    start: Sequence[int] | None = None, search_limit: int = 10_000) -> StageParams:
    """Stage sequences following the recursions of each tower.

    Jiang-Su steps take the smallest ratios ``d₀ > 2q_n``, ``d₁ > 2p_n``
    keeping ``p, q`` coprime and both remainders ``r₀, r₁`` nonzero (so
    that all three kinds of ``λ`` occur).
    """
    if stages < 1:
        raise ValueError("need at least one stage")
    if variant == "jiang-su":
        p, q = start or (2, 3)
        if gcd(p, q) != 1:
            raise ValueError("p and q must be coprime")
        vals = [(p, q)]
        for _ in range(stages - 1):
            d0, d1 = _js_next(p, q, search_limit)
            p, q = p * d0, q * d1
            vals.append((p, q))
    elif variant == "razak":
        a, b = start or (1, 1)
        vals = [(a, b)]
        for _ in range(stages - 1):
            a = 2 * a + 1
            b = a * b
            vals.append((a, b))
    elif variant == "z0":
        a, b, h = start or (1, 1, 1)
        vals = [(a, b, h)]
        for _ in range(stages - 1):
            m = (2 * a + 2) * h + 1
            a, b = m * a, m * b
            vals.append((a, b, h))
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return StageParams(variant, tuple(vals), seed)


def check_params(params: StageParams) -> list[tuple[str, bool, str]]:
    """Every recursion and divisibility requirement, as ``(name, passed, detail)``."""
    out = []
    V = params.values
    for n in range(1, params.stages):
        v, w = V[n - 1], V[n]
        if params.variant == "jiang-su":
            p, q = v
            p1, q1 = w
            out.append((f"coprime[{n + 1}]", gcd(p1, q1) == 1, f"gcd({p1},{q1}) = {gcd(p1, q1)}"))
            div = p1 % p == 0 and q1 % q == 0
            out.append((f"divides[{n}]", div, f"{p}|{p1}, {q}|{q1}"))
            if not div:
                continue
            d0, d1 = p1 // p, q1 // q
            out.append((f"ratio[{n}]", d0 > 2 * q and d1 > 2 * p, f"d0={d0} > {2 * q}, d1={d1} > {2 * p}"))
            d = d0 * d1
            r0, r1 = d % q1, d % p1
            out.append((f"remainders[{n}]", r0 % d1 == 0 and r1 % d0 == 0,
                        f"d={d}, r0={r0}, r1={r1}, d1={d1}|r0, d0={d0}|r1"))
            out.append((f"lambda_ranges[{n}]", 0 < r0 and 0 < r1 and r0 + r1 < d,
                        f"{r0} ends at t/2, {d - r0 - r1} at 1/2, {r1} at (t+1)/2"))
        elif params.variant == "razak":
            a, b = v
            a1, b1 = w
            out.append((f"recursion[{n}]", a1 == 2 * a + 1 and b1 == a1 * b, f"a={a1}, b={b1}"))
        else:
            a, b, h = v
            a1, b1, _ = w
            m = (2 * a + 2) * h + 1
            out.append((f"recursion[{n}]", a1 == m * a and b1 == m * b, f"a={a1}, b={b1}"))
        bp = params.breakpoints(n)
        sizes_ok = params.strand_count(n + 1) == params.strand_count(n) * bp.d
        out.append((f"strand_product[{n}]", sizes_ok,
                    f"|X({n + 1})| = {params.strand_count(n + 1)} = {params.strand_count(n)}·{bp.d}"))
    return out


# ---------------------------------------------------------------------------
# stages

Key = Hashable
Label = tuple[Key, int] | None

KIND_CODE = {"L": 0, "M": 1, "U": 2, "ID": 3}


def _stage_one_label(params: StageParams, s: int, t: int) -> Label:
    v = params.values[0]
    if params.variant == "jiang-su":
        p, q = v
        i, j = divmod(s, q)
        return (("p", i), j) if t == 0 else (("q", j), i)
    if params.variant == "razak":
        a, _ = v
        b, x = divmod(s, a + 1)
        if t == 0 and x == a:
            return None
        return (("b", b), x)
    a, b, _ = v
    fb, x = divmod(s, a + 1)
    f, bb = divmod(fb, b)
    if t == 0 and x == a:
        return None
    return (("f", f, bb), x)


@dataclass(frozen=True)
class LabelBatch:
    """End labels of many strands at one time, as parallel arrays.

    ``is_e`` marks classes lying over a glued end of the stage below and
    ``ref`` is then that parent class; otherwise ``ref`` is the strand below
    whose midpoint the class lies over.  Entries with ``active`` false are
    missing ends and carry no meaning.
    """

    active: np.ndarray
    is_e: np.ndarray
    ref: np.ndarray
    chunk: np.ndarray
    pos: np.ndarray


def _key_parts(key: Key) -> tuple[bool, int, int]:
    if isinstance(key, tuple) and key and key[0] in ("E", "I"):
        return key[0] == "E", int(key[1]), int(key[-1])
    return False, -1, -1


class StageGroupoid:
    """Strands of one stage with their end labels ``(class key, position)``."""

    params: StageParams
    n: int
    strand_count: int
    materialized: bool
    _class_size: tuple[int, int]

    @property
    def paired(self) -> bool:
        return self.params.paired

    def class_size(self, t: int) -> int:
        return self._class_size[t]

    def label(self, s: int, t: int) -> Label:
        raise NotImplementedError

    def batch(self, s: np.ndarray, t: int) -> LabelBatch:
        raise NotImplementedError

    def to_json(self, limit: int = 64) -> dict:
        shown = min(self.strand_count, limit)
        return {
            "stage": self.n,
            "strands": self.strand_count,
            "materialized": self.materialized,
            "class_size": list(self._class_size),
            "labels": [[format_label(self.label(s, t)) for t in (0, 1)] for s in range(shown)],
        }


class MaterializedStage(StageGroupoid):
    """A stage whose labels are stored in tables.

    ``cls[t][s]`` indexes ``keys`` (``-1`` for a missing end) and
    ``pos[t][s]`` is the position of the end inside its class.
    """

    def __init__(self, params: StageParams, n: int, keys: list[Key],
                 cls: tuple[np.ndarray, np.ndarray], pos: tuple[np.ndarray, np.ndarray],
                 class_size: tuple[int, int]):
        self.params = params
        self.n = n
        self.materialized = True
        self._class_size = class_size
        self.keys = keys
        self.cls = cls
        self.pos = pos
        self.strand_count = len(cls[0])
        parts = [_key_parts(k) for k in keys] or [(False, -1, -1)]
        self._key_is_e = np.array([p[0] for p in parts], dtype=bool)
        self._key_ref = np.array([p[1] for p in parts], dtype=np.int64)
        self._key_chunk = np.array([p[2] for p in parts], dtype=np.int64)

    @classmethod
    def from_labels(cls_, params: StageParams, n: int, labels: Iterable[tuple[Label, Label]],
                    class_size: tuple[int, int]) -> "MaterializedStage":
        keys: list[Key] = []
        index: dict[Key, int] = {}
        cols: tuple[list[int], list[int]] = ([], [])
        poss: tuple[list[int], list[int]] = ([], [])
        for pair in labels:
            for t, lab in enumerate(pair):
                if lab is None:
                    cols[t].append(-1)
                    poss[t].append(-1)
                    continue
                key, position = lab
                if key not in index:
                    index[key] = len(keys)
                    keys.append(key)
                cols[t].append(index[key])
                poss[t].append(position)
        arr = lambda v: np.array(v, dtype=np.int64)  # noqa: E731
        return cls_(params, n, keys, (arr(cols[0]), arr(cols[1])), (arr(poss[0]), arr(poss[1])), class_size)

    @property
    def class_total(self) -> int:
        return len(self.keys)

    def label(self, s: int, t: int) -> Label:
        c = int(self.cls[t][s])
        if c < 0:
            return None
        return (self.keys[c], int(self.pos[t][s]))

    def batch(self, s: np.ndarray, t: int) -> LabelBatch:
        c = self.cls[t][s]
        active = c >= 0
        cc = np.where(active, c, 0)
        return LabelBatch(active, self._key_is_e[cc] & active, self._key_ref[cc],
                          self._key_chunk[cc], self.pos[t][s])


class LazyStage(StageGroupoid):
    """A stage too large to tabulate; labels come from the connecting map."""

    def __init__(self, cmap: "ConnectingMap"):
        self.params = cmap.params
        self.n = cmap.n + 1
        self.materialized = False
        self._class_size = cmap.chunk
        self.strand_count = cmap.target.strand_count * cmap.bp.d
        self._cmap = cmap

    def label(self, s: int, t: int) -> Label:
        return self._cmap.child_label(s, t)

    def batch(self, s: np.ndarray, t: int) -> LabelBatch:
        return self._cmap.child_batch(s, t)


def format_key(key: Key) -> str:
    if isinstance(key, tuple):
        return "(" + ",".join(format_key(k) for k in key) + ")"
    return str(key)


def format_label(label: Label) -> str | None:
    return None if label is None else f"{format_key(label[0])}@{label[1]}"


# ---------------------------------------------------------------------------
# connecting maps


def _standard_kinds(bp: Breakpoints) -> list[str]:
    return ["L"] * bp.lo + ["M"] * (bp.hi - bp.lo) + ["U"] * (bp.d - bp.hi)


class ConnectingMap:
    """The map from stage ``n+1`` (``source``) to stage ``n`` (``target``).

    ``kinds[y-1]`` is the λ-type of ``y`` and ``chunk`` the class sizes of
    the source.  ``overrides`` replaces individual end labels of the source
    and exists to build corrupted negative controls.
    """

    def __init__(self, params: StageParams, n: int, target: MaterializedStage, bp: Breakpoints,
                 chunk: tuple[int, int], kinds: Sequence[str] | None = None,
                 overrides: dict[tuple[int, int], Label] | None = None,
                 materialize: bool | None = None):
        self.params = params
        self.n = n
        self.target = target
        self.bp = bp
        self.chunk = chunk
        self.kinds = list(kinds) if kinds is not None else _standard_kinds(bp)
        if len(self.kinds) != bp.d:
            raise ValueError("one λ-type per y is required")
        self.overrides = dict(overrides or {})
        self.paired = params.paired
        self.parent_size = (target.class_size(0), target.class_size(1))
        codes = np.array([KIND_CODE[k] for k in self.kinds], dtype=np.int8)
        # bnd[t][y-1]: λ_y(t) is a glued end (then it equals t); otherwise it is 1/2
        self.bnd: list[np.ndarray] = []
        self.place: list[np.ndarray] = []
        for t in (0, 1):
            fixed = [k for k in KIND_CODE if lam(k, t) in (0, 1)]
            for k in fixed:
                if lam(k, t) != t:
                    raise ValueError(f"λ-type {k} swaps the ends")
            b = np.isin(codes, [KIND_CODE[k] for k in fixed])
            idx = np.empty(bp.d, dtype=np.int64)
            for kind, mask in (("E", b), ("I", ~b)):
                count = int(mask.sum())
                rank = np.arange(count, dtype=np.int64)
                if params.seed is not None:
                    rng = np.random.default_rng([params.seed, n, t, KIND_CODE["L" if kind == "E" else "M"]])
                    rank = rng.permutation(count).astype(np.int64)
                idx[mask] = rank
            self.bnd.append(b)
            self.place.append(idx)
        self.group_counts = {t: (int(self.bnd[t].sum()), int((~self.bnd[t]).sum())) for t in (0, 1)}
        total = target.strand_count * bp.d
        if materialize is None:
            materialize = total <= MATERIALIZE_LIMIT
        self.source: StageGroupoid = self._materialize(total) if materialize else LazyStage(self)

    # labels -------------------------------------------------------------
    def _key(self, is_e: bool, ref: int, t: int, chunk: int) -> Key:
        kind = "E" if is_e else "I"
        return (kind, ref, chunk) if self.paired else (kind, ref, t, chunk)

    def child_batch(self, s: np.ndarray, t: int) -> LabelBatch:
        """Labels of the source ends ``(t, s)`` computed from the target tables."""
        s = np.asarray(s, dtype=np.int64)
        d = self.bp.d
        x, yy = np.divmod(s, d)
        b = self.bnd[t][yy]
        idx = self.place[t][yy]
        parent = self.target.cls[t][x]
        ppos = self.target.pos[t][x]
        active = ~b | (parent >= 0)
        rank = np.where(b, idx * self.parent_size[t] + ppos, idx)
        c = self.chunk[t]
        out = LabelBatch(active, b & active, np.where(b, parent, x), rank // c, rank % c)
        if self.overrides:
            for (so, to), lab in self.overrides.items():
                if to != t:
                    continue
                for i in np.nonzero(s == so)[0]:
                    if lab is None:
                        out.active[i] = False
                        continue
                    e, ref, ch = _key_parts(lab[0])
                    out.active[i], out.is_e[i], out.ref[i], out.chunk[i], out.pos[i] = True, e, ref, ch, lab[1]
        return out

    def child_label(self, s: int, t: int) -> Label:
        if (s, t) in self.overrides:
            return self.overrides[(s, t)]
        b = self.child_batch(np.array([s]), t)
        if not b.active[0]:
            return None
        return (self._key(bool(b.is_e[0]), int(b.ref[0]), t, int(b.chunk[0])), int(b.pos[0]))

    def _materialize(self, total: int) -> MaterializedStage:
        s = np.arange(total, dtype=np.int64)
        batches = [self.child_batch(s, t) for t in (0, 1)]
        R = max(self.target.strand_count, self.target.class_total) + 1
        C = int(max((int(b.chunk[b.active].max()) if b.active.any() else 0) for b in batches)) + 1
        codes = []
        for t, b in enumerate(batches):
            code = ((b.is_e.astype(np.int64) * R + b.ref) * C + b.chunk) * 2 + (0 if self.paired else t)
            codes.append(code[b.active])
        uniq, inv = np.unique(np.concatenate(codes), return_inverse=True)
        keys = []
        for code in uniq.tolist():
            rest, t = divmod(code, 2)
            rest, chunk = divmod(rest, C)
            is_e, ref = divmod(rest, R)
            keys.append(self._key(bool(is_e), ref, t, chunk))
        cls, pos = [], []
        start = 0
        for b in batches:
            col = np.full(total, -1, dtype=np.int64)
            k = int(b.active.sum())
            col[b.active] = inv[start:start + k]
            start += k
            cls.append(col)
            pos.append(np.where(b.active, b.pos, -1))
        return MaterializedStage(self.params, self.n + 1, keys, (cls[0], cls[1]), (pos[0], pos[1]), self.chunk)

    def image(self, s: int, t: int) -> str:
        """Where the end ``(t, s)`` lands in the target unit space, for reports."""
        x, yy = divmod(s, self.bp.d)
        if self.bnd[t][yy]:
            parent = int(self.target.cls[t][x])
            if parent < 0:
                return f"missing end of strand {x} at t={t}"
            return f"class {format_key(self.target.keys[parent])}"
        return f"(1/2, strand {x})"

    def strand_map(self, s: int) -> int:
        return s // self.bp.d

    def to_json(self) -> dict:
        return {
            "from_stage": self.n + 1,
            "to_stage": self.n,
            "breakpoints": self.bp.to_json(),
            "lambda_counts": {k: self.kinds.count(k) for k in sorted(set(self.kinds))},
            "chunk": list(self.chunk),
            "materialized": self.source.materialized,
            "overrides": len(self.overrides),
        }


class _Tower:
    """Memoized stages and maps of one parameter set."""

    def __init__(self, params: StageParams):
        self.params = params
        self._stages: dict[int, StageGroupoid] = {}
        self._maps: dict[int, ConnectingMap] = {}

    def stage(self, n: int) -> StageGroupoid:
        if n in self._stages:
            return self._stages[n]
        p = self.params
        p._check_stage(n)
        if n == 1:
            st: StageGroupoid = MaterializedStage.from_labels(
                p, 1,
                ((_stage_one_label(p, s, 0), _stage_one_label(p, s, 1)) for s in range(p.strand_count(1))),
                (p.class_size(1, 0), p.class_size(1, 1)),
            )
        else:
            st = self.connecting(n - 1).source
        self._stages[n] = st
        return st

    def connecting(self, n: int) -> ConnectingMap:
        if n in self._maps:
            return self._maps[n]
        p = self.params
        if not 1 <= n < p.stages:
            raise ValueError(f"no connecting map from stage {n + 1} to stage {n}")
        target = self.stage(n)
        if not isinstance(target, MaterializedStage):
            raise ValueError(f"stage {n} is too large to tabulate; only the top stage may be lazy")
        cm = ConnectingMap(p, n, target, p.breakpoints(n), (p.class_size(n + 1, 0), p.class_size(n + 1, 1)))
        self._maps[n] = cm
        return cm


@lru_cache(maxsize=16)
def _tower(params: StageParams) -> _Tower:
    return _Tower(params)


def build_stage(params: StageParams, n: int) -> StageGroupoid:
    return _tower(params).stage(n)


def build_connecting(params: StageParams, n: int,
                     overrides: dict[tuple[int, int], Label] | None = None) -> ConnectingMap:
    """The map from stage ``n+1`` to stage ``n``; ``overrides`` gives a fresh, modified copy."""
    if not overrides:
        return _tower(params).connecting(n)
    target = build_stage(params, n)
    if not isinstance(target, MaterializedStage):
        raise ValueError(f"stage {n} is too large to tabulate")
    return ConnectingMap(params, n, target, params.breakpoints(n),
                         (params.class_size(n + 1, 0), params.class_size(n + 1, 1)), overrides=overrides)


def identity_connecting(params: StageParams, n: int) -> ConnectingMap:
    """One source strand per target strand with ``λ = id``: stage ``n`` over itself."""
    target = build_stage(params, n)
    if not isinstance(target, MaterializedStage):
        raise ValueError("identity map needs a tabulated stage")
    chunk = (params.class_size(n, 0), params.class_size(n, 1))
    return ConnectingMap(params, n, target, Breakpoints(1, 1, 1), chunk, kinds=["ID"])


def corrupt_gluing(params: StageParams, n: int = 1) -> dict[tuple[int, int], Label]:
    """Swap the classes of two ``t = 0`` ends sitting at the same position.

    One end lies over a glued end of stage ``n``, the other over a midpoint.
    Positions are kept, so only the descent condition can notice.
    """
    src = build_connecting(params, n).source
    if not isinstance(src, MaterializedStage):
        raise ValueError("corruption needs a tabulated source stage")
    first_e: dict[int, int] = {}
    for s in range(src.strand_count):
        lab = src.label(s, 0)
        if lab is not None and lab[0][0] == "E":
            first_e.setdefault(lab[1], s)
    for s in range(src.strand_count):
        lab = src.label(s, 0)
        if lab is not None and lab[0][0] == "I" and lab[1] in first_e:
            e = first_e[lab[1]]
            return {(e, 0): lab, (s, 0): src.label(e, 0)}
    raise ValueError("no pair of ends to swap")


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: dict | None
    data: dict

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "witness": self.witness, "data": self.data}


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.checks]


SAMPLE_STRANDS = 2000


def _sample(cm: ConnectingMap, size: int = SAMPLE_STRANDS) -> tuple[np.ndarray, np.ndarray]:
    """Target strands and ``y`` values to test on a lazy source stage.

    Every λ-type contributes its first, last and three random ``y``; the
    strand and ``y`` of every overridden end are always included.
    """
    rng = random.Random(f"{cm.params.seed}:{cm.n}:sample")
    S = cm.target.strand_count
    xs = set(rng.sample(range(S), min(S, size)))
    ys: set[int] = set()
    # λ-types come in contiguous runs of y; sample the ends and a few inside of each run
    runs: list[list] = []
    for y, k in enumerate(cm.kinds, start=1):
        if runs and runs[-1][0] == k:
            runs[-1][2] = y
        else:
            runs.append([k, y, y])
    for _k, a, b in runs:
        ys.update({a, b})
        ys.update(rng.sample(range(a, b + 1), min(3, b - a + 1)))
    for (s, _t) in cm.overrides:
        x, yy = divmod(s, cm.bp.d)
        xs.add(x)
        ys.add(yy + 1)
    return np.array(sorted(xs), dtype=np.int64), np.array(sorted(ys), dtype=np.int64)


def _ends(cm: ConnectingMap) -> tuple[np.ndarray, str]:
    """All source strands when tabulated, else the sampled ones."""
    if cm.source.materialized:
        return np.arange(cm.source.strand_count, dtype=np.int64), "exhaustive"
    xs, ys = _sample(cm)
    return (xs[:, None] * cm.bp.d + ys[None, :] - 1).ravel(), "sampled"


def _first_conflict(key: np.ndarray, val: np.ndarray) -> int | None:
    """Index of an entry whose ``val`` differs from another entry with the same ``key``."""
    if len(key) < 2:
        return None
    order = np.lexsort((val, key))
    k, v = key[order], val[order]
    bad = (k[1:] == k[:-1]) & (v[1:] != v[:-1])
    if not bad.any():
        return None
    return int(order[int(np.argmax(bad)) + 1])


def _check_descent(cm: ConnectingMap) -> CheckResult:
    """Each class promises one image point; every end must land there."""
    s, mode = _ends(cm)
    d = cm.bp.d
    x, yy = np.divmod(s, d)
    for t in (0, 1):
        b = cm.source.batch(s, t)
        bnd = cm.bnd[t][yy]
        parent = cm.target.cls[t][x]
        want_active = ~bnd | (parent >= 0)
        ok = (b.active == want_active) & (
            ~b.active | ((b.is_e == bnd) & (b.ref == np.where(bnd, parent, x))))
        if not ok.all():
            i = int(np.argmin(ok))
            st = int(s[i])
            return CheckResult("descent", False, {
                "strand": st, "t": t, "label": format_label(cm.source.label(st, t)),
                "image": cm.image(st, t),
            }, {"mode": mode, "ends_checked": 2 * len(s)})
    return CheckResult("descent", True, None, {"mode": mode, "ends_checked": 2 * len(s)})


def _dyadic_cells(depth: int) -> list[tuple[Fraction, Fraction]]:
    n = 2 ** depth
    return [(Fraction(k, n), Fraction(k + 1, n)) for k in range(n)]


def _preimage(kind: str, a: Fraction, b: Fraction) -> tuple[Fraction, Fraction] | None:
    """``λ^{-1}([a, b]) ∩ [0, 1]`` as a closed interval, or ``None`` if empty."""
    slope, off = LAMBDA[kind]
    if slope == 0:
        return (Fraction(0), Fraction(1)) if a <= off <= b else None
    lo, hi = max((a - off) / slope, Fraction(0)), min((b - off) / slope, Fraction(1))
    return (lo, hi) if lo <= hi else None


def _check_surjective(cm: ConnectingMap, depth: int) -> CheckResult:
    kinds = sorted(set(cm.kinds))
    grid = [Fraction(k, 2 ** depth) for k in range(2 ** depth + 1)]
    for u in grid:
        if not any(_preimage(k, u, u) for k in kinds):
            return CheckResult("surjective", False, {"uncovered_time": str(u)}, {"kinds": kinds})
    tgt = cm.target
    d = cm.bp.d
    covered = 0
    for t in (0, 1):
        ys = np.nonzero(cm.bnd[t])[0]
        if len(ys) == 0:
            return CheckResult("surjective", False, {"t": t, "reason": "no λ fixes this end"}, {})
        y0 = int(ys[0])
        # every glued end of the target is hit by some end labelled over it
        xs = np.nonzero(tgt.cls[t] >= 0)[0]
        parents = tgt.cls[t][xs]
        hits = np.zeros(tgt.class_total, dtype=np.int64)
        for y in ys[:2].tolist():
            b = cm.source.batch(xs * d + y, t)
            good = b.active & b.is_e & (b.ref == parents)
            hits += np.bincount(parents[good], minlength=tgt.class_total)
        present = np.unique(parents)
        missing = present[hits[present] == 0]
        if len(missing):
            return CheckResult("surjective", False, {
                "class": format_key(tgt.keys[int(missing[0])]), "t": t,
                "reason": "no end is labelled over this glued end"}, {})
        covered += len(present)
        # arrows between glued ends: parents at one position keep a common position
        s = xs * d + y0
        b = cm.source.batch(s, t)
        if not b.active.all():
            i = int(np.argmin(b.active))
            return CheckResult("surjective", False, {"strand": int(s[i]), "t": t,
                                                     "reason": "end over a glued end is missing"}, {})
        i = _first_conflict(tgt.pos[t][xs], b.pos)
        if i is not None:
            return CheckResult("surjective", False, {"strand": int(s[i]), "t": t,
                                                     "reason": "arrow at this position has no preimage"}, {})
    return CheckResult("surjective", True, None, {"grid_points": len(grid), "classes_covered": covered,
                                                  "kinds": kinds})


def _check_proper(cm: ConnectingMap, depth: int) -> CheckResult:
    kinds = sorted(set(cm.kinds))
    cells = _dyadic_cells(depth)
    intervals = 0
    for k in kinds:
        for a, b in cells:
            pre = _preimage(k, a, b)
            if pre is None:
                continue
            lo, hi = pre
            if not (0 <= lo <= hi <= 1 and a <= lam(k, lo) <= b and a <= lam(k, hi) <= b):
                return CheckResult("proper", False, {"kind": k, "cell": [str(a), str(b)]}, {})
            intervals += 1
        for end in (0, 1):
            pre = _preimage(k, Fraction(end), Fraction(end))
            if pre is not None and not (pre[0] == pre[1] and pre[0] in (0, 1)):
                return CheckResult("proper", False, {"kind": k, "end": end,
                                                     "preimage": [str(pre[0]), str(pre[1])]}, {})
    return CheckResult("proper", True, None, {
        "depth": depth, "cells": len(cells), "preimage_intervals": intervals,
        "strands_per_target_strand": cm.bp.d,
    })


def _check_fibrewise(cm: ConnectingMap) -> CheckResult:
    """Source fibres at ends biject onto target fibres.

    For fixed ``(y, t)``: over a glued end, ends whose parents share a
    position must share the new position; over a midpoint all ends need the
    same position, since the target fibre there is every strand.
    """
    s, mode = _ends(cm)
    d = cm.bp.d
    x, yy = np.divmod(s, d)
    width = int(max(cm.target.pos[0].max(initial=0), cm.target.pos[1].max(initial=0))) + 2
    checked = 0
    for t in (0, 1):
        b = cm.source.batch(s, t)
        bnd = cm.bnd[t][yy]
        key = yy * width + np.where(bnd, cm.target.pos[t][x], width - 1)
        act = b.active
        checked += int(act.sum())
        i = _first_conflict(key[act], b.pos[act])
        if i is not None:
            j = int(np.nonzero(act)[0][i])
            over_end = bool(bnd[j])
            return CheckResult("fibrewise_bijective", False, {
                "strand": int(s[j]), "t": t, "y": int(yy[j]) + 1,
                "reason": "position not determined by the parent position" if over_end
                else "position varies over a midpoint fibre",
            }, {"mode": mode})
    return CheckResult("fibrewise_bijective", True, None, {"mode": mode, "ends_checked": checked})


def check_morphism_hypotheses(cm: ConnectingMap, dyadic_depth: int = 6) -> HypothesisReport:
    """Descent, surjectivity, properness and fibrewise bijectivity of one connecting map."""
    return HypothesisReport((
        _check_descent(cm),
        _check_surjective(cm, dyadic_depth),
        _check_proper(cm, dyadic_depth),
        _check_fibrewise(cm),
    ))


# ---------------------------------------------------------------------------
# unit spaces


@dataclass(frozen=True)
class UnitSpaceGraph:
    """Unit space of a stage as a graph: classes and leaves as vertices, strands as edges."""

    stage: int
    V: int
    E: int
    b0: int
    method: str
    component_sizes: tuple[int, ...] | None = None
    edges: tuple[tuple[int, int], ...] | None = field(default=None, repr=False, compare=False)
    vertex_names: tuple[str, ...] | None = field(default=None, repr=False, compare=False)

    @property
    def b1(self) -> int:
        return self.E - self.V + self.b0

    def to_json(self) -> dict:
        return {
            "stage": self.stage, "V": self.V, "E": self.E, "b0": self.b0, "b1": self.b1,
            "method": self.method,
            "component_sizes": None if self.component_sizes is None else list(self.component_sizes),
        }

    def to_dot(self) -> str:
        if self.edges is None or self.vertex_names is None:
            raise ValueError("graph is too large to draw")
        lines = [f'graph "X{self.stage}" {{']
        for v, name in enumerate(self.vertex_names):
            lines.append(f'  v{v} [label="{name}"];')
        for s, (a, b) in enumerate(self.edges):
            lines.append(f'  v{a} -- v{b} [label="{s}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _edge_arrays(stage: MaterializedStage) -> tuple[np.ndarray, np.ndarray, int]:
    """Endpoints of every strand; each missing end becomes its own leaf vertex."""
    ends = []
    V = stage.class_total
    for t in (0, 1):
        c = stage.cls[t].copy()
        missing = np.nonzero(c < 0)[0]
        c[missing] = V + np.arange(len(missing))
        V += len(missing)
        ends.append(c)
    return ends[0], ends[1], V


DOT_LIMIT = 5000


def unit_space(stage: StageGroupoid, cmap: ConnectingMap | None = None) -> UnitSpaceGraph:
    """Graph invariants of a stage.

    Tabulated stages are counted directly.  A lazy stage needs the map that
    defines it; its component count is inherited from the stage below once
    :func:`fibred_components` certifies that the fibres are connected.
    """
    if isinstance(stage, MaterializedStage):
        a, b, V = _edge_arrays(stage)
        E = len(a)
        g = coo_matrix((np.ones(E, dtype=np.int8), (a, b)), shape=(V, V))
        b0, labels = connected_components(g, directed=False)
        sizes = tuple(sorted(np.bincount(labels, minlength=b0).tolist(), reverse=True))
        edges = names = None
        if E <= DOT_LIMIT:
            edges = tuple(zip(a.tolist(), b.tolist()))
            names = [format_key(k) for k in stage.keys]
            for t in (0, 1):
                names += [f"open({s},t{t})" for s in np.nonzero(stage.cls[t] < 0)[0].tolist()]
            names = tuple(names)
        return UnitSpaceGraph(stage.n, V, E, int(b0), "exhaustive", sizes, edges, names)
    if cmap is None or cmap.source is not stage:
        raise ValueError("a lazy stage needs its connecting map")
    cert = fibred_components(cmap)
    if not cert["ok"]:
        raise ValueError(f"cannot certify the component count of stage {stage.n}: {cert['reason']}")
    p = stage.params
    V = p.class_count(stage.n) + p.inactive_count(stage.n)
    below = unit_space(cmap.target)
    return UnitSpaceGraph(stage.n, V, stage.strand_count, below.b0, "fibred")


def _interior_graph(cm: ConnectingMap) -> tuple[int, int]:
    """Classes over one midpoint and their components, from the ranking rule.

    Nodes are midpoint chunks (per time unless the gluing is paired); edges
    are the ``y`` with ``λ_y = 1/2``.  Returns ``(nodes, components)``.
    """
    c0, c1 = cm.chunk
    n0 = -(-cm.group_counts[0][1] // c0)
    n1 = -(-cm.group_counts[1][1] // c1)
    mid = ~cm.bnd[0] & ~cm.bnd[1]
    a = cm.place[0][mid] // c0
    b = cm.place[1][mid] // c1
    if cm.paired:
        N = max(n0, n1)
    else:
        N = n0 + n1
        b = b + n0
    if N == 0:
        return 0, 0
    g = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(N, N))
    k, _ = connected_components(g, directed=False)
    return N, int(k)


def fibred_components(cm: ConnectingMap) -> dict:
    """Certificate that the source stage has as many components as the target.

    Three facts suffice: each chunk over a glued end holds at least a parent
    class worth of ends (so the first chunk meets every strand through the
    parent), the classes over one midpoint form a connected graph, and the
    labels of midpoint ends follow the ranking rule for every strand tested.
    """
    for t in (0, 1):
        if cm.group_counts[t][0] and cm.chunk[t] < cm.parent_size[t]:
            return {"ok": False,
                    "reason": f"chunk {cm.chunk[t]} below parent class size {cm.parent_size[t]} at t={t}"}
    nodes, comps = _interior_graph(cm)
    if comps > 1:
        return {"ok": False, "reason": f"classes over a midpoint fall into {comps} components"}
    s, mode = _ends(cm)
    yy = s % cm.bp.d
    for t in (0, 1):
        mid = ~cm.bnd[t][yy]
        b = cm.source.batch(s[mid], t)
        want = cm.place[t][yy[mid]] // cm.chunk[t]
        ok = b.active & ~b.is_e & (b.ref == s[mid] // cm.bp.d) & (b.chunk == want)
        if not ok.all():
            st = int(s[mid][int(np.argmin(ok))])
            return {"ok": False, "reason": f"midpoint end of strand {st} at t={t} leaves the ranking rule"}
    return {"ok": True, "reason": "", "interior_classes": nodes, "mode": mode}


# ---------------------------------------------------------------------------
# H¹ transfer


@dataclass(frozen=True)
class H1Transfer:
    """``p^*: H¹(X_n) → H¹(X_{n+1})`` for a connecting map ``p``."""

    source_b1: int
    target_b1: int
    rank: int
    method: str
    matrix: IntMatrix | None = None
    certificate: dict | None = None

    @property
    def injective(self) -> bool:
        return self.rank == self.source_b1

    @property
    def hom(self) -> GroupHom:
        if self.matrix is None:
            raise ValueError("no explicit matrix for this transfer")
        return GroupHom(CyclicSum((0,) * self.source_b1), CyclicSum((0,) * self.target_b1), self.matrix)

    def to_json(self) -> dict:
        return {"source_b1": self.source_b1, "target_b1": self.target_b1, "rank": self.rank,
                "injective": self.injective, "method": self.method, "certificate": self.certificate}


def _spanning_forest(n_vertices: int, a: Sequence[int], b: Sequence[int]):
    """BFS forest: per vertex its parent, the tree edge to it (or -1) and its depth."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_vertices)]
    for e, (u, v) in enumerate(zip(a, b)):
        adj[u].append((v, e))
        adj[v].append((u, e))
    parent_edge = [-1] * n_vertices
    parent = [-1] * n_vertices
    depth = [-1] * n_vertices
    for root in range(n_vertices):
        if depth[root] >= 0:
            continue
        depth[root] = 0
        todo = deque([root])
        while todo:
            v = todo.popleft()
            for w, e in adj[v]:
                if depth[w] < 0:
                    depth[w] = depth[v] + 1
                    parent[w] = v
                    parent_edge[w] = e
                    todo.append(w)
    tree = {e for e in parent_edge if e >= 0}
    return parent, parent_edge, depth, tree


def _fundamental_cycle(e: int, a, b, parent, parent_edge, depth) -> dict[int, int]:
    """Cycle through non-tree edge ``e`` (oriented t=0 → t=1) as edge coefficients."""
    coeff = {e: 1}
    # close the cycle with the tree path b[e] → lca → a[e]
    u, v = b[e], a[e]
    while u != v:
        if depth[u] >= depth[v]:
            pe = parent_edge[u]
            sign = 1 if a[pe] == u else -1
            u = parent[u]
        else:
            pe = parent_edge[v]
            sign = 1 if a[pe] == parent[v] else -1
            v = parent[v]
        coeff[pe] = coeff.get(pe, 0) + sign
    return {k: c for k, c in coeff.items() if c}


def _rank_mod_p(rows: Iterable[dict[int, int]], ncols: int, prime: int = 2_147_483_647) -> int:
    """Rank of sparse integer rows modulo a prime, stopping once it reaches ``ncols``.

    A full rank modulo ``p`` is a full rank over the rationals.
    """
    basis: dict[int, dict[int, int]] = {}
    for row in rows:
        r = {k: v % prime for k, v in row.items() if v % prime}
        while r:
            lead = min(r)
            if lead not in basis:
                inv = pow(r[lead], -1, prime)
                basis[lead] = {k: v * inv % prime for k, v in r.items()}
                break
            f = r[lead]
            for k, v in basis[lead].items():
                nv = (r.get(k, 0) - f * v) % prime
                if nv:
                    r[k] = nv
                else:
                    r.pop(k, None)
        if len(basis) == ncols:
            break
    return len(basis)


EXPLICIT_H1_LIMIT = 60_000
SNF_LIMIT = 40_000


def h1_transfer(cm: ConnectingMap, method: str | None = None) -> H1Transfer:
    """The transfer on first cohomology, by explicit matrix or by a lifting certificate.

    Explicit: on the bases dual to fundamental cycles, entry ``[e', e]`` is
    the coefficient of target strand ``e`` in the image of the source cycle
    ``Z_{e'}``.  Only ``y`` with ``λ_y = t/2`` (or ``id``) are summed, since
    ``1_e`` is cohomologous to the indicator of the lower half of ``e``.

    Lifting: every target strand lifts to a path over its lower half,
    through the classes over its midpoint, then over its upper half, and the
    lifts start and end in the first chunk over the parent classes.  Lifts
    of consecutive strands therefore meet, loops lift to loops, ``H₁`` maps
    onto ``H₁`` and the transfer is injective.
    """
    tgt = cm.target
    g_t = unit_space(tgt)
    if method is None:
        small = cm.source.materialized and cm.source.strand_count <= EXPLICIT_H1_LIMIT
        method = "explicit" if small else "lifting"
    if method == "explicit":
        src = cm.source
        if not isinstance(src, MaterializedStage):
            raise ValueError("explicit transfer needs a tabulated source stage")
        sa, sb, sV = (v if isinstance(v, int) else v.tolist() for v in _edge_arrays(src))
        ta, tb, tV = (v if isinstance(v, int) else v.tolist() for v in _edge_arrays(tgt))
        par, pe, dep, tree_s = _spanning_forest(sV, sa, sb)
        _, _, _, tree_t = _spanning_forest(tV, ta, tb)
        basis_t = [e for e in range(len(ta)) if e not in tree_t]
        col = {e: i for i, e in enumerate(basis_t)}
        d = cm.bp.d
        lower = {y for y, k in enumerate(cm.kinds) if k in ("L", "ID")}
        rows = []
        for e in range(len(sa)):
            if e in tree_s:
                continue
            row: dict[int, int] = {}
            for s, c in _fundamental_cycle(e, sa, sb, par, pe, dep).items():
                x, yy = divmod(s, d)
                if yy in lower and x in col:
                    row[col[x]] = row.get(col[x], 0) + c
            rows.append(row)
        source_b1, target_b1 = len(basis_t), len(rows)
        if source_b1 != g_t.b1:
            raise AssertionError("fundamental cycles disagree with the Euler characteristic")
        M = None
        if target_b1 * max(source_b1, 1) <= 50 * SNF_LIMIT:
            M = IntMatrix.from_rows([[r.get(i, 0) for i in range(source_b1)] for r in rows], source_b1)
        if M is not None and target_b1 * source_b1 <= SNF_LIMIT:
            rank = smith_normal_form(M).rank
        else:
            rank = _rank_mod_p(rows, source_b1)
        return H1Transfer(source_b1, target_b1, rank, "explicit", M)
    if method != "lifting":
        raise ValueError(f"unknown method {method!r}")
    cert = _lifting_certificate(cm)
    g_s = unit_space(cm.source, cm) if cert["ok"] or not cm.source.materialized else unit_space(cm.source)
    rank = g_t.b1 if cert["ok"] else -1
    return H1Transfer(g_t.b1, g_s.b1, rank, "lifting", None, cert)


def _lift_ys(cm: ConnectingMap) -> tuple[int | None, int | None]:
    """Per time, the ``y`` ranked first among ends over glued ends (0-based)."""
    out: list[int | None] = []
    for t in (0, 1):
        hits = np.nonzero(cm.bnd[t] & (cm.place[t] == 0))[0]
        out.append(int(hits[0]) if len(hits) else None)
    return out[0], out[1]


def _lifting_certificate(cm: ConnectingMap) -> dict:
    fib = fibred_components(cm)
    if not fib["ok"]:
        return {"ok": False, "reason": fib["reason"]}
    yl, yu = _lift_ys(cm)
    if yl is None or yu is None:
        return {"ok": False, "reason": "no λ fixes one of the ends"}
    tgt = cm.target
    d = cm.bp.d
    x = np.arange(tgt.strand_count, dtype=np.int64)
    for t, y in ((0, yl), (1, yu)):
        # the half-lift starts in the first chunk over the parent class
        b = cm.source.batch(x * d + y, t)
        parent = tgt.cls[t]
        ok = np.where(parent >= 0, b.active & b.is_e & (b.ref == parent) & (b.chunk == 0), ~b.active)
        if not ok.all():
            i = int(np.argmin(ok))
            return {"ok": False, "reason": f"lift of strand {i} does not start in the first chunk at t={t}"}
        # and its other end lies over the midpoint of the same strand
        b = cm.source.batch(x * d + y, 1 - t)
        ok = b.active & ~b.is_e & (b.ref == x)
        if not ok.all():
            i = int(np.argmin(ok))
            return {"ok": False, "reason": f"lift of strand {i} misses its midpoint"}
    return {"ok": True, "reason": "", "lower_y": yl + 1, "upper_y": yu + 1,
            "strands": tgt.strand_count, "interior_classes": fib["interior_classes"]}


# ---------------------------------------------------------------------------
# truncated towers


@dataclass(frozen=True)
class TruncatedTower:
    """Stages ``start .. start+depth`` with the maps between them."""

    params: StageParams
    start: int
    depth: int
    maps: tuple[ConnectingMap, ...]
    twist: str = "trivial"

    @property
    def divisor(self) -> int:
        out = 1
        for cm in self.maps:
            out *= cm.bp.d
        return out

    def composite_strand(self, s):
        return s // self.divisor

    def stepwise_strand(self, s):
        for cm in reversed(self.maps):
            s = s // cm.bp.d
        return s

    def composite_time(self, s: np.ndarray, t: int) -> tuple[np.ndarray, int]:
        """Time of the image of ``(t, s)`` in the bottom stage, as ``num / 2^depth``."""
        num = np.full(len(s), t, dtype=np.int64)
        den = 1
        for cm in reversed(self.maps):
            s, yy = np.divmod(s, cm.bp.d)
            codes = np.array([KIND_CODE[k] for k in cm.kinds], dtype=np.int8)[yy]
            num = np.select([codes == 0, codes == 1, codes == 2], [num, np.full_like(num, den), num + den], 2 * num)
            den *= 2
        return num, den

    def to_json(self) -> dict:
        return {"start": self.start, "depth": self.depth, "twist": self.twist,
                "divisor": self.divisor, "maps": [cm.to_json() for cm in self.maps]}


def tower_truncate(params: StageParams, n: int, depth: int) -> TruncatedTower:
    """Stages ``n..n+depth`` with their composite map down to stage ``n``."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if n + depth > params.stages:
        raise ValueError(f"depth {depth} from stage {n} exceeds the {params.stages} generated stages")
    maps = tuple(build_connecting(params, k) for k in range(n, n + depth))
    return TruncatedTower(params, n, depth, maps)


def refinement_audit(tower: TruncatedTower, samples: int = 20_000) -> dict:
    """Ends glued at a higher stage stay glued in the bottom stage.

    For each level ``j``, every class of stage ``start+j`` must send all of
    its ends to one point of stage ``start`` under the composite map, and
    the composite strand map must agree with the step-by-step one.
    Tabulated stages are checked exhaustively, the lazy top stage on samples.
    """
    levels = []
    ok = True
    for j in range(1, tower.depth + 1):
        sub = TruncatedTower(tower.params, tower.start, j, tower.maps[:j])
        top = sub.maps[-1].source
        bottom = sub.maps[0].target
        if top.materialized:
            s = np.arange(top.strand_count, dtype=np.int64)
        else:
            rng = np.random.default_rng([0 if tower.params.seed is None else tower.params.seed, j])
            s = np.unique(rng.integers(0, top.strand_count, size=samples, dtype=np.int64))
        x = sub.composite_strand(s)
        level_ok = bool((x == sub.stepwise_strand(s)).all())
        for t in (0, 1):
            b = top.batch(s, t)
            num, den = sub.composite_time(s, t)
            end = (num == 0) | (num == den)
            where = np.where(num == 0, bottom.cls[0][x], np.where(num == den, bottom.cls[1][x], -1))
            point = np.where(end, -2 - where, x * (den + 1) + num)
            # a class is identified by its label parts; tabulated stages use the table index
            if isinstance(top, MaterializedStage):
                cls = top.cls[t][s]
            else:
                width = int(b.chunk.max(initial=0)) + 1
                cls = (b.is_e.astype(np.int64) * (top.strand_count + 1) + b.ref) * width + b.chunk
                if not top.paired:
                    cls = cls * 2 + t
            act = b.active
            key = cls[act]
            if _first_conflict(key, point[act]) is not None:
                level_ok = False
        ok = ok and level_ok
        levels.append({"stage": top.n, "ok": level_ok, "mode": "exhaustive" if top.materialized else "sampled",
                       "strands_checked": int(len(s))})
    return {"ok": ok, "levels": levels}
