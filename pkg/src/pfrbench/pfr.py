"""Structured subsets of small-doubling lattice sets and the coordinate query game.

Given A in Z^d with |A+A| = K|A|, the fiber tree T(A) has no binary subtree
with more than K^2 leaves, and the low-vs-binary alternative then yields a
subset A' with |A'| >= K^(-2/eps)|A| whose own fiber tree has branch depth at
most floor(eps * log2 |A|). Bob identifies any hidden x in A' by querying
one coordinate per branching node.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .exact import (
    CheckResult,
    ResourceCapExceeded,
    check,
    check_epsilon,
    floor_eps_log2,
    fraction_str,
    pow_ratio_ge,
)
from .lattice import DEFAULT_MAX_SIZE, LatticeSet, Point, sumset
from .trees import (
    FiberTree,
    QuasicubeCertificate,
    branch_depth,
    build_fiber_tree,
    max_binary_subtree,
    max_low_subtree,
    quasicube_subset_certificate,
)

QUERY_ORACLE_MAX_SIZE = 64
QUERY_ORACLE_MAX_DIM = 8


@dataclass(frozen=True)
class ExtractionResult:
    source: LatticeSet
    subset: LatticeSet
    epsilon: Fraction
    query_budget: int
    binary_max: int
    tree: FiberTree
    sumset_size: int | None
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "epsilon": fraction_str(self.epsilon),
            "source_size": len(self.source),
            "sumset_size": self.sumset_size,
            "subset_size": len(self.subset),
            "query_budget": self.query_budget,
            "binary_max": self.binary_max,
            "branch_depth": branch_depth(self.tree),
            "subset": [list(p) for p in self.subset.points],
            "checks": [c.to_json() for c in self.checks],
        }


@dataclass(frozen=True)
class QueryTranscript:
    queries: tuple[tuple[int, int], ...]
    element: Point

    def __len__(self) -> int:
        return len(self.queries)


@dataclass(frozen=True)
class BetaUpper:
    """Smallest searched value of |A1 + A2 + U|^2 / (|A1| |A2|); never labelled beta."""

    squared_ratio: Fraction
    witness: tuple[str, str]
    candidates_tried: int


@dataclass(frozen=True)
class BetaLower:
    """b(T(U)): size of a quasicube-contained subset of U, certified by replay."""

    value: int
    subset: LatticeSet
    certificate: QuasicubeCertificate | None


@dataclass(frozen=True)
class BetaEstimate:
    lower: BetaLower | None = None
    upper: BetaUpper | None = None

    def consistent(self) -> bool:
        if self.lower is None or self.upper is None:
            return True
        return Fraction(self.lower.value) ** 2 <= self.upper.squared_ratio


def extract_structured_subset(A: LatticeSet, eps: Fraction | str, *, with_doubling: bool = True,
                              cap: int = DEFAULT_MAX_SIZE) -> ExtractionResult:
    """Largest eps-low leaf subset of T(A), with the size guarantees checked exactly."""
    eps = check_epsilon(eps)
    n = len(A)
    if n < 2:
        raise ValueError("extraction needs |A| >= 2")
    p, q = eps.numerator, eps.denominator
    T = build_fiber_tree(A)
    b, _ = max_binary_subtree(T)
    budget = floor_eps_log2(n, eps)
    D, witness = max_low_subtree(T, budget)
    sub = LatticeSet(A.dimension, tuple(witness.points(T)))
    checks = [
        CheckResult("tree alternative |A'| * b^(1/eps) >= |A|", len(sub) ** p * b**q, n**p,
                    ">=", pow_ratio_ge(len(sub), b, n, eps)),
    ]
    sumset_size = None
    if with_doubling:
        sumset_size = len(sumset(A, A, cap=cap))
        # |A'| >= K^(-2/eps) |A| with K = |A+A|/|A|, cleared of roots and denominators
        checks.append(check("doubling guarantee |A'|^p |A+A|^(2q) >= |A|^(p+2q)",
                            len(sub) ** p * sumset_size ** (2 * q), ">=", n ** (p + 2 * q)))
        checks.append(check("binary bound b |A|^2 <= |A+A|^2", b * n * n, "<=", sumset_size**2))
    sub_tree = build_fiber_tree(sub)
    checks.append(check("branch depth of T(A') <= budget", branch_depth(sub_tree), "<=", budget))
    return ExtractionResult(A, sub, eps, budget, b, sub_tree, sumset_size, tuple(checks))


def run_query_protocol(result: ExtractionResult | FiberTree, x: Sequence[int]) -> QueryTranscript:
    """Walk T(A') from the root, querying the split coordinate at each branching node."""
    T = result.tree if isinstance(result, ExtractionResult) else result
    x = tuple(x)
    v = 0
    queries = []
    while T.children[v]:
        kids = T.children[v]
        if len(kids) == 1:
            v = kids[0]
            continue
        j = T.labels[kids[0]][0]
        value = x[j - 1]
        queries.append((j, value))
        nxt = [c for c in kids if T.labels[c][1] == value]
        if not nxt:
            raise KeyError(f"{x} is not in the extracted set")
        v = nxt[0]
    if T.points[v] != x:
        raise KeyError(f"{x} is not in the extracted set")
    return QueryTranscript(tuple(queries), x)


def exact_query_complexity(A: LatticeSet) -> int:
    """Optimal worst-case number of coordinate queries (adaptive minimax, oracle scale)."""
    if len(A) > QUERY_ORACLE_MAX_SIZE or A.dimension > QUERY_ORACLE_MAX_DIM:
        raise ResourceCapExceeded(
            f"query oracle limited to |A| <= {QUERY_ORACLE_MAX_SIZE}, d <= {QUERY_ORACLE_MAX_DIM}")
    d = A.dimension
    memo: dict[frozenset, int] = {}

    def cost(S: tuple[Point, ...]) -> int:
        if len(S) <= 1:
            return 0
        key = frozenset(S)
        if key in memo:
            return memo[key]
        best = None
        for i in range(d):
            groups: dict[int, list[Point]] = {}
            for pt in S:
                groups.setdefault(pt[i], []).append(pt)
            if len(groups) == 1:
                continue
            worst = 0
            for g in groups.values():
                worst = max(worst, cost(tuple(g)))
                if best is not None and worst + 1 >= best:
                    break
            if best is None or worst + 1 < best:
                best = worst + 1
        memo[key] = best
        return best

    return cost(A.points)


# -- beta brackets ---------------------------------------------------------------


def beta_lower_from_tree(U: LatticeSet) -> BetaLower:
    """b(T(U)) lower-bounds beta(U): the binary-subtree leaves lie in a quasicube."""
    T = build_fiber_tree(U)
    b, witness = max_binary_subtree(T)
    B = LatticeSet.of(witness.points(T), U.dimension)
    return BetaLower(b, B, quasicube_subset_certificate(B))


def _box(d: int, m: int) -> LatticeSet:
    pts = [()]
    for _ in range(d):
        pts = [p + (x,) for p in pts for x in range(m)]
    return LatticeSet.of(pts, d)


def _axis_ap(d: int, i: int, m: int) -> LatticeSet:
    return LatticeSet.of([tuple(x if c == i else 0 for c in range(d)) for x in range(m)], d)


def default_candidate_family(U: LatticeSet, *, seed: int = 0, max_points: int = 4096,
                             random_count: int = 8) -> list[tuple[str, LatticeSet, str, LatticeSet]]:
    """Candidate (A1, A2) pairs: singletons, U itself, boxes, axis APs, random subsets."""
    d = U.dimension
    rng = random.Random(seed)
    origin = LatticeSet.of([(0,) * d], d)
    named: list[tuple[str, LatticeSet]] = [("origin", origin), ("U", U)]
    m = 2
    while m**d <= max_points and m <= 64:
        named.append((f"box{m}", _box(d, m)))
        m *= 2
    for i in range(d):
        for m in (2, 4, 16, 64):
            named.append((f"ap{i + 1}x{m}", _axis_ap(d, i, m)))
    pts = list(U.points)
    for r in range(random_count):
        k = rng.randint(1, len(pts))
        named.append((f"randU{r}", LatticeSet.of(rng.sample(pts, k), d)))
    pairs = []
    for idx, (na, A1) in enumerate(named):
        pairs.append((na, A1, na, A1))
        pairs.append((na, A1, "origin", origin))
        if idx + 1 < len(named):
            nb, A2 = named[idx + 1]
            pairs.append((na, A1, nb, A2))
    return pairs


def beta_upper_search(U: LatticeSet, candidate_pairs: Iterable[tuple[str, LatticeSet, str, LatticeSet]] | None = None,
                      *, seed: int = 0, cap: int = DEFAULT_MAX_SIZE) -> BetaUpper:
    """Minimum of |A1 + A2 + U|^2 / (|A1||A2|) over the supplied pairs (squares keep it rational)."""
    pairs = list(candidate_pairs) if candidate_pairs is not None else default_candidate_family(U, seed=seed)
    if not pairs:
        raise ValueError("no candidate pairs supplied")
    best: tuple[Fraction, tuple[str, str]] | None = None
    for na, A1, nb, A2 in pairs:
        total = len(sumset(sumset(A1, A2, cap=cap), U, cap=cap))
        val = Fraction(total * total, len(A1) * len(A2))
        key = (val, (na, nb))
        if best is None or key < best:
            best = key
    return BetaUpper(best[0], best[1], len(pairs))


def doubling_consistency_check(A: LatticeSet, *, cap: int = DEFAULT_MAX_SIZE) -> CheckResult:
    """b(T(A)) * |A|^2 <= |A+A|^2, the squared form of b <= K^2."""
    b, _ = max_binary_subtree(build_fiber_tree(A))
    s = len(sumset(A, A, cap=cap))
    n = len(A)
    return check("b(T(A)) |A|^2 <= |A+A|^2", b * n * n, "<=", s * s)
