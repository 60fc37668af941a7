"""Finite sets over Z and Z^d: sumsets, product sets, doubling, prime valuations.

Coordinates are 1-based throughout (``fibers(A, 1)`` splits on the first
coordinate), matching the (j, value) labels carried by fiber trees.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import sympy

from .exact import ResourceCapExceeded

DEFAULT_MAX_SIZE = 10**7
# Largest packed code we let numpy handle; leaves headroom below 2**63.
_PACK_LIMIT = 1 << 62
_CHUNK_PAIRS = 1 << 22
# Dense boolean path: bounding box of the result and total shift work.
_DENSE_MAX_CELLS = 1 << 23
_DENSE_MAX_WORK = 1 << 28

Point = tuple[int, ...]


@dataclass(frozen=True)
class IntSet:
    elements: tuple[int, ...]

    def __post_init__(self) -> None:
        els = self.elements
        if any(not isinstance(x, int) or isinstance(x, bool) for x in els):
            raise TypeError("IntSet elements must be Python ints")
        if any(a >= b for a, b in zip(els, els[1:])):
            raise ValueError("IntSet elements must be strictly increasing")

    @classmethod
    def of(cls, values: Iterable[int]) -> "IntSet":
        return cls(tuple(sorted({int(v) for v in values})))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x: object) -> bool:
        i = bisect.bisect_left(self.elements, x)
        return i < len(self.elements) and self.elements[i] == x

    def as_lattice(self) -> "LatticeSet":
        return LatticeSet(1, tuple((x,) for x in self.elements))


@dataclass(frozen=True)
class LatticeSet:
    dimension: int
    points: tuple[Point, ...]

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        for pt in self.points:
            if len(pt) != self.dimension:
                raise ValueError(f"point {pt} does not have {self.dimension} coordinates")
        if any(a >= b for a, b in zip(self.points, self.points[1:])):
            raise ValueError("LatticeSet points must be strictly increasing (lexicographic)")

    @classmethod
    def of(cls, points: Iterable[Sequence[int]], dimension: int | None = None) -> "LatticeSet":
        pts = sorted({tuple(int(c) for c in p) for p in points})
        if dimension is None:
            if not pts:
                raise ValueError("cannot infer the dimension of an empty point list")
            dimension = len(pts[0])
        return cls(dimension, tuple(pts))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, x: object) -> bool:
        i = bisect.bisect_left(self.points, x)
        return i < len(self.points) and self.points[i] == x

    def projection(self, i: int) -> tuple[int, ...]:
        """Sorted distinct values of coordinate ``i`` (1-based)."""
        _check_coord(self, i)
        return tuple(sorted({p[i - 1] for p in self.points}))

    def subset(self, pts: Iterable[Point]) -> "LatticeSet":
        return LatticeSet.of(pts, self.dimension)


AnySet = Union[IntSet, LatticeSet]


@dataclass(frozen=True)
class PrimeBasis:
    primes: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.primes:
            raise ValueError("a prime basis needs at least one prime")
        if any(a >= b for a, b in zip(self.primes, self.primes[1:])):
            raise ValueError("primes must be sorted and distinct")
        for p in self.primes:
            if not sympy.isprime(p):
                raise ValueError(f"{p} is not prime")

    def __len__(self) -> int:
        return len(self.primes)

    def union(self, other: "PrimeBasis") -> "PrimeBasis":
        return PrimeBasis(tuple(sorted(set(self.primes) | set(other.primes))))


@dataclass(frozen=True)
class DoublingStats:
    size: int
    sumset_size: int
    product_size: int
    K_plus: Fraction
    K_star: Fraction


def _check_coord(A: LatticeSet, i: int) -> None:
    if not 1 <= i <= A.dimension:
        raise IndexError(f"coordinate {i} out of range 1..{A.dimension}")


def _as_rows(S: AnySet) -> tuple[list[Point], int]:
    if isinstance(S, IntSet):
        return [(x,) for x in S.elements], 1
    return list(S.points), S.dimension


def _packed_sum(rows_a: list[Point], rows_b: list[Point], d: int, cap: int) -> list[Point] | None:
    """Sumset via mixed-radix packing into int64 codes; None when it does not fit."""
    lo_a = [min(p[i] for p in rows_a) for i in range(d)]
    lo_b = [min(p[i] for p in rows_b) for i in range(d)]
    spans = [
        max(p[i] for p in rows_a) - lo_a[i] + max(p[i] for p in rows_b) - lo_b[i] + 1
        for i in range(d)
    ]
    strides = []
    total = 1
    for s in reversed(spans):
        strides.append(total)
        total *= s
    strides.reverse()
    if total >= _PACK_LIMIT:
        return None

    def encode(rows, lows):
        code = np.zeros(len(rows), dtype=np.int64)
        for i in range(d):
            col = np.fromiter((p[i] - lows[i] for p in rows), dtype=np.int64, count=len(rows))
            code += col * strides[i]
        return code

    ca, cb = encode(rows_a, lo_a), encode(rows_b, lo_b)
    if len(ca) < len(cb):
        ca, cb = cb, ca
    step = max(1, _CHUNK_PAIRS // len(cb))
    acc = np.empty(0, dtype=np.int64)
    for start in range(0, len(ca), step):
        part = np.add.outer(ca[start:start + step], cb).ravel()
        acc = np.union1d(acc, part)
        if len(acc) > cap:
            raise ResourceCapExceeded(f"sumset exceeds the cap of {cap} points")
    cols = []
    rem = acc
    for i in range(d):
        q, rem = np.divmod(rem, strides[i])
        base = lo_a[i] + lo_b[i]
        cols.append([v + base for v in q.tolist()])
    return list(zip(*cols))


def _dense_sum(rows_a: list[Point], rows_b: list[Point], d: int) -> list[Point] | None:
    """Sumset as a union of shifted boolean boxes; None when the box is too large."""
    lo_a = [min(p[i] for p in rows_a) for i in range(d)]
    lo_b = [min(p[i] for p in rows_b) for i in range(d)]
    ext_a = [max(p[i] for p in rows_a) - lo_a[i] + 1 for i in range(d)]
    ext_b = [max(p[i] for p in rows_b) - lo_b[i] + 1 for i in range(d)]
    shape = tuple(ea + eb - 1 for ea, eb in zip(ext_a, ext_b))
    cells = 1
    for s in shape:
        cells *= s
    if cells > _DENSE_MAX_CELLS:
        return None
    if len(rows_b) > len(rows_a):
        rows_a, rows_b, lo_a, lo_b, ext_a, ext_b = rows_b, rows_a, lo_b, lo_a, ext_b, ext_a
    if len(rows_b) * cells > _DENSE_MAX_WORK:
        return None
    base = np.zeros(tuple(ext_a), dtype=bool)
    idx = np.array([[p[i] - lo_a[i] for i in range(d)] for p in rows_a], dtype=np.int64)
    base[tuple(idx.T)] = True
    out = np.zeros(shape, dtype=bool)
    for r in rows_b:
        sl = tuple(slice(r[i] - lo_b[i], r[i] - lo_b[i] + ext_a[i]) for i in range(d))
        out[sl] |= base
    hits = np.nonzero(out)
    cols = [[v + lo_a[i] + lo_b[i] for v in hits[i].tolist()] for i in range(d)]
    return list(zip(*cols))


def sumset(A: AnySet, B: AnySet, *, cap: int = DEFAULT_MAX_SIZE) -> AnySet:
    """A + B, deduplicated and sorted. IntSet inputs give an IntSet."""
    if isinstance(A, IntSet) != isinstance(B, IntSet):
        raise TypeError("cannot add an IntSet to a LatticeSet")
    rows_a, da = _as_rows(A)
    rows_b, db = _as_rows(B)
    if da != db:
        raise ValueError(f"dimension mismatch: {da} vs {db}")
    if not rows_a or not rows_b:
        out: list[Point] = []
    else:
        out = _dense_sum(rows_a, rows_b, da)
        if out is not None and len(out) > cap:
            raise ResourceCapExceeded(f"sumset exceeds the cap of {cap} points")
        if out is None:
            out = _packed_sum(rows_a, rows_b, da, cap)
        if out is None:
            seen = {tuple(x + y for x, y in zip(p, r)) for p in rows_a for r in rows_b}
            if len(seen) > cap:
                raise ResourceCapExceeded(f"sumset exceeds the cap of {cap} points")
            out = sorted(seen)
    if isinstance(A, IntSet):
        return IntSet(tuple(p[0] for p in out))
    return LatticeSet(da, tuple(out))


def iterated_sumset(A: AnySet, k: int, *, cap: int = DEFAULT_MAX_SIZE) -> AnySet:
    """kA = A + ... + A (k copies), deduplicating after every addition."""
    if k < 1:
        raise ValueError("k must be at least 1")
    acc = A
    for _ in range(k - 1):
        acc = sumset(acc, A, cap=cap)
    return acc


def product_set(X: IntSet, Y: IntSet, *, cap: int = DEFAULT_MAX_SIZE) -> IntSet:
    out = {x * y for x in X.elements for y in Y.elements}
    if len(out) > cap:
        raise ResourceCapExceeded(f"product set exceeds the cap of {cap} elements")
    return IntSet(tuple(sorted(out)))


def iterated_product(X: IntSet, k: int, *, cap: int = DEFAULT_MAX_SIZE) -> IntSet:
    """A^(k), the k-fold product set."""
    if k < 1:
        raise ValueError("k must be at least 1")
    acc = X
    for _ in range(k - 1):
        acc = product_set(acc, X, cap=cap)
    return acc


def doubling_stats(A: IntSet) -> DoublingStats:
    if len(A) < 1:
        raise ValueError("doubling statistics need a non-empty set")
    n = len(A)
    s = len(sumset(A, A))
    p = len(product_set(A, A))
    return DoublingStats(n, s, p, Fraction(s, n), Fraction(p, n))


def fibers(A: LatticeSet, i: int) -> dict[int, LatticeSet]:
    """Partition of A by the value of coordinate ``i`` (1-based)."""
    _check_coord(A, i)
    groups: dict[int, list[Point]] = {}
    for p in A.points:
        groups.setdefault(p[i - 1], []).append(p)
    # points are already sorted, so each group is too
    return {v: LatticeSet(A.dimension, tuple(pts)) for v, pts in sorted(groups.items())}


# -- prime valuations -------------------------------------------------------


def _factor(a: int) -> dict[int, int]:
    return {int(p): int(e) for p, e in sympy.factorint(a).items()}


def valuation_map(X: IntSet) -> tuple[LatticeSet, PrimeBasis]:
    """Embed positive integers into Z^D via a -> (v_p1(a), ..., v_pD(a))."""
    if len(X) == 0:
        raise ValueError("valuation_map needs a non-empty set")
    if X.elements[0] <= 0:
        raise ValueError("valuation_map is defined on positive integers only")
    facts = [_factor(a) for a in X.elements]
    primes = sorted({p for f in facts for p in f})
    if not primes:
        # X == {1}: keep a one-dimensional ambient space
        primes = [2]
    basis = PrimeBasis(tuple(primes))
    pts = [tuple(f.get(p, 0) for p in primes) for f in facts]
    return LatticeSet.of(pts, len(primes)), basis


def realign(L: LatticeSet, basis: PrimeBasis, target: PrimeBasis) -> LatticeSet:
    """Re-embed valuation vectors into a larger basis, padding with zero exponents."""
    if L.dimension != len(basis):
        raise ValueError("lattice dimension does not match the basis")
    missing = set(basis.primes) - set(target.primes)
    if missing:
        raise ValueError(f"target basis lacks primes {sorted(missing)}")
    index = {p: i for i, p in enumerate(basis.primes)}
    pts = [
        tuple(pt[index[p]] if p in index else 0 for p in target.primes) for pt in L.points
    ]
    return LatticeSet.of(pts, len(target))


def valuation_inverse(L: LatticeSet, basis: PrimeBasis, *, max_bits: int = 1 << 20) -> IntSet:
    """Map exponent vectors back to integers a = prod p_i^e_i."""
    if L.dimension != len(basis):
        raise ValueError(f"dimension {L.dimension} does not match basis of size {len(basis)}")
    out = []
    for pt in L.points:
        if any(e < 0 for e in pt):
            raise ValueError(f"negative exponent in {pt}")
        bits = sum(e * p.bit_length() for e, p in zip(pt, basis.primes))
        if bits > max_bits:
            raise ResourceCapExceeded(f"exponent vector {pt} gives an integer of ~{bits} bits")
        a = 1
        for e, p in zip(pt, basis.primes):
            a *= p**e
        out.append(a)
    return IntSet.of(out)


# -- set files ---------------------------------------------------------------


def parse_set_text(text: str) -> AnySet:
    """Parse the line-oriented set format.

    Lines holding a single integer give an IntSet; comma-separated lines give
    a LatticeSet (a one-dimensional lattice point is written ``5,``). Blank
    lines and lines starting with '#' are skipped.
    """
    rows: list[tuple[int, ...]] = []
    lattice = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lattice = lattice or "," in line
        try:
            rows.append(tuple(int(c) for c in line.rstrip(",").split(",")))
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from None
    if not rows:
        raise ValueError("set file contains no elements")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent point dimensions {sorted(widths)}")
    if not lattice:
        return IntSet.of(r[0] for r in rows)
    return LatticeSet.of(rows)


def format_set(S: AnySet) -> str:
    if isinstance(S, IntSet):
        return "".join(f"{x}\n" for x in S.elements)
    if S.dimension == 1:
        return "".join(f"{p[0]},\n" for p in S.points)
    return "".join(",".join(str(c) for c in p) + "\n" for p in S.points)


def read_set(path: str | Path) -> AnySet:
    return parse_set_text(Path(path).read_text(encoding="utf-8"))


def write_set(S: AnySet, path: str | Path) -> None:
    Path(path).write_text(format_set(S), encoding="utf-8")
