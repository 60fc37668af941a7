"""Rooted trees, the fiber tree T(A), and their decomposition statistics.

Trees are stored flat: node 0 is the root and nodes are numbered in preorder,
so every child id exceeds its parent's and a reverse sweep is a postorder.
Leaves are numbered 0..N-1 in DFS order; a node's leaves form a contiguous
range ``[leaf_lo[v], leaf_hi[v])``.

A subtree T' of T is the LCA-closure of a leaf subset: its nodes are the
chosen leaves and all their pairwise lowest common ancestors. Every internal
node of such an induced tree branches, so its branch depth is the largest
number of branching ancestors above a chosen leaf.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact import InvariantViolation, ResourceCapExceeded, floor_eps_log2, pow_ratio_ge, check_epsilon
from .lattice import LatticeSet, Point, fibers

Label = tuple[int, int]

BRUTE_FORCE_MAX_LEAVES = 14


class FiberTree:
    """Immutable rooted tree with optional (coordinate, value) edge labels.

    ``children[v]`` lists child node ids; ``labels[v]`` is the (j, value)
    pair on the edge into v (None for the root and for unlabeled trees);
    ``points[v]`` is the lattice point carried by a leaf, or None.
    """

    __slots__ = ("children", "labels", "points", "parent", "leaf_nodes", "leaf_lo", "leaf_hi",
                 "node_depth", "_leaf_of_node")

    def __init__(self, children: Sequence[Sequence[int]], labels: Sequence[Label | None] | None = None,
                 points: Sequence[Point | None] | None = None):
        n = len(children)
        if n == 0:
            raise ValueError("a tree needs a root")
        self.children = tuple(tuple(c) for c in children)
        self.labels = tuple(labels) if labels is not None else (None,) * n
        self.points = tuple(points) if points is not None else (None,) * n
        parent = [-1] * n
        for v, kids in enumerate(self.children):
            for c in kids:
                if c <= v or parent[c] != -1:
                    raise ValueError("children must be numbered in preorder with a single parent")
                parent[c] = v
        if any(p == -1 for p in parent[1:]):
            raise ValueError("every non-root node needs a parent")
        self.parent = tuple(parent)
        depth = [0] * n
        for v in range(1, n):
            depth[v] = depth[parent[v]] + 1
        self.node_depth = tuple(depth)
        lo = [0] * n
        hi = [0] * n
        leaf_nodes = []
        # preorder ids visit leaves in DFS order only if each subtree is contiguous
        for v in range(n):
            if not self.children[v]:
                leaf_nodes.append(v)
        self.leaf_nodes = tuple(leaf_nodes)
        self._leaf_of_node = {v: i for i, v in enumerate(leaf_nodes)}
        for v in reversed(range(n)):
            kids = self.children[v]
            if not kids:
                lo[v] = self._leaf_of_node[v]
                hi[v] = lo[v] + 1
            else:
                lo[v] = lo[kids[0]]
                hi[v] = hi[kids[-1]]
                for a, b in zip(kids, kids[1:]):
                    if hi[a] != lo[b]:
                        raise ValueError("node numbering is not a preorder")
        self.leaf_lo = tuple(lo)
        self.leaf_hi = tuple(hi)

    def __len__(self) -> int:
        return len(self.children)

    @property
    def leaf_count(self) -> int:
        return len(self.leaf_nodes)

    @property
    def height(self) -> int:
        return max(self.node_depth)

    def leaf_count_of(self, v: int) -> int:
        return self.leaf_hi[v] - self.leaf_lo[v]

    def leaf_index(self, node: int) -> int:
        return self._leaf_of_node[node]

    def leaf_point(self, leaf: int) -> Point | None:
        return self.points[self.leaf_nodes[leaf]]

    def path_to_root(self, v: int) -> list[int]:
        path = []
        while v != -1:
            path.append(v)
            v = self.parent[v]
        return path

    def is_binary(self) -> bool:
        return all(len(c) <= 2 for c in self.children)

    def shape(self):
        """Nested-list shape (leaf = [])."""
        def rec(v):
            return [rec(c) for c in self.children[v]]
        return rec(0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiberTree):
            return NotImplemented
        return (self.children, self.labels, self.points) == (other.children, other.labels, other.points)

    def __hash__(self) -> int:
        return hash((self.children, self.labels, self.points))

    def __repr__(self) -> str:
        return f"FiberTree(nodes={len(self)}, leaves={self.leaf_count})"


@dataclass(frozen=True)
class TreeStats:
    leaf_count: int
    branch_depth: int
    binary_max: int
    binary_witness: tuple[int, ...]
    # low_max[B] is the largest B-low leaf subset size, for B = 0..branch_depth
    low_max: tuple[int, ...]
    low_witness: tuple[tuple[int, ...], ...]

    def low_max_at(self, budget: int) -> int:
        return self.low_max[min(budget, len(self.low_max) - 1)]


@dataclass(frozen=True)
class LeafSubset:
    leaves: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "leaves", tuple(sorted(set(self.leaves))))

    def __len__(self) -> int:
        return len(self.leaves)

    def induced_tree(self, T: FiberTree) -> FiberTree:
        return induced_tree(T, self.leaves)

    def points(self, T: FiberTree) -> list[Point]:
        return [T.leaf_point(l) for l in self.leaves]


@dataclass(frozen=True)
class QuasicubeCertificate:
    """Either a set of size <= 1 (coordinate None), or a split on one coordinate
    taking exactly two values with a certificate for each fiber."""

    size: int
    coordinate: int | None = None
    values: tuple[int, ...] = ()
    parts: tuple["QuasicubeCertificate", ...] = ()

    def depth(self) -> int:
        return 0 if not self.parts else 1 + max(p.depth() for p in self.parts)


# -- construction --------------------------------------------------------------


def from_nested(shape) -> FiberTree:
    """Build an unlabeled tree from nested lists; ``[]`` is a leaf."""
    children: list[list[int]] = []

    def rec(node) -> int:
        v = len(children)
        children.append([])
        for sub in node:
            children[v].append(rec(sub))
        return v

    rec(shape)
    return FiberTree(children)


def build_fiber_tree(A: LatticeSet) -> FiberTree:
    """T(A): split on the smallest coordinate that is not constant, recurse on fibers."""
    if len(A) == 0:
        raise ValueError("cannot build the fiber tree of an empty set")
    children: list[list[int]] = []
    labels: list[Label | None] = []
    points: list[Point | None] = []
    d = A.dimension

    def rec(S: LatticeSet, start: int, label: Label | None) -> int:
        v = len(children)
        children.append([])
        labels.append(label)
        points.append(None)
        if len(S) == 1:
            points[v] = S.points[0]
            return v
        j = start
        while len({p[j - 1] for p in S.points}) == 1:
            j += 1
        for value, fiber in fibers(S, j).items():
            children[v].append(rec(fiber, j + 1, (j, value)))
        return v

    if d < 1:
        raise ValueError("dimension must be positive")
    rec(A, 1, None)
    return FiberTree(children, labels, points)


def induced_tree(T: FiberTree, leaves: Iterable[int]) -> FiberTree:
    """LCA-closure of a leaf subset, keeping original labels and points."""
    chosen = sorted(set(leaves))
    if not chosen:
        raise ValueError("empty leaf subset")
    mark = _hit_counts(T, chosen)
    hit, count = mark
    keep = [v for v in range(len(T)) if hit[v] and (count[v] >= 2 or not T.children[v])]
    new_id = {v: i for i, v in enumerate(keep)}
    kept_children: list[list[int]] = [[] for _ in keep]
    for v in keep[1:]:
        u = T.parent[v]
        while u not in new_id:
            u = T.parent[u]
        kept_children[new_id[u]].append(new_id[v])
    return FiberTree(kept_children, [T.labels[v] for v in keep], [T.points[v] for v in keep])


def _hit_counts(T: FiberTree, leaves: Sequence[int]) -> tuple[list[bool], list[int]]:
    n = len(T)
    hit = [False] * n
    for l in leaves:
        hit[T.leaf_nodes[l]] = True
    count = [0] * n
    for v in reversed(range(1, n)):
        if hit[v]:
            count[T.parent[v]] += 1
            hit[T.parent[v]] = True
    return hit, count


def random_tree(rng: random.Random, max_leaves: int, *, max_arity: int | None = None,
                max_depth: int | None = None, leaves: int | None = None) -> FiberTree:
    """Seeded uniform recursive attachment.

    New nodes attach to a uniformly chosen node that still has spare arity and
    depth until the tree reaches the target leaf count (drawn uniformly from
    1..max_leaves unless ``leaves`` is given) or no node can accept children.
    Attaching under a leaf keeps the leaf count, so unary chains do occur.
    """
    target = leaves if leaves is not None else rng.randint(1, max_leaves)
    parent = [-1]
    depth = [0]
    kids = [[]]
    eligible = [0]
    where = {0: 0}
    n_leaves = 1

    def drop(v: int) -> None:
        i = where.pop(v)
        last = eligible.pop()
        if last != v:
            eligible[i] = last
            where[last] = i

    while n_leaves < target and eligible:
        v = eligible[rng.randrange(len(eligible))]
        if kids[v]:
            n_leaves += 1
        c = len(parent)
        parent.append(v)
        depth.append(depth[v] + 1)
        kids.append([])
        kids[v].append(c)
        if max_arity is not None and len(kids[v]) >= max_arity:
            drop(v)
        if max_depth is None or depth[c] < max_depth:
            where[c] = len(eligible)
            eligible.append(c)

    order: list[int] = []
    stack = [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(kids[v]))
    new_id = {v: i for i, v in enumerate(order)}
    return FiberTree([[new_id[c] for c in kids[v]] for v in order])


# -- statistics ------------------------------------------------------------------


def branch_depth(T: FiberTree) -> int:
    """max over leaves of the number of ancestors (inclusive) with >= 2 children."""
    n = len(T)
    branching = [0] * n
    for v in range(n):
        here = 1 if len(T.children[v]) >= 2 else 0
        branching[v] = here + (branching[T.parent[v]] if v else 0)
    return max(branching[v] for v in T.leaf_nodes)


def subset_branch_depth(T: FiberTree, leaves: Sequence[int]) -> int:
    """Branch depth of the LCA-closure of ``leaves`` without materialising it."""
    hit, count = _hit_counts(T, leaves)
    n = len(T)
    acc = [0] * n
    best = 0
    for v in range(n):
        if not hit[v]:
            continue
        acc[v] = (acc[T.parent[v]] if v else 0) + (1 if count[v] >= 2 else 0)
        if not T.children[v]:
            best = max(best, acc[v])
    return best


def subset_is_binary(T: FiberTree, leaves: Sequence[int]) -> bool:
    _, count = _hit_counts(T, leaves)
    return max(count) <= 2


def _binary_values(T: FiberTree) -> list[int]:
    n = len(T)
    b = [1] * n
    for v in reversed(range(n)):
        kids = T.children[v]
        if not kids:
            continue
        vals = sorted((b[c] for c in kids), reverse=True)
        b[v] = vals[0] + vals[1] if len(vals) >= 2 else vals[0]
    return b


def max_binary_subtree(T: FiberTree) -> tuple[int, LeafSubset]:
    """b(T) and the lexicographically smallest optimal leaf subset.

    b(v) = max(max_c b(c), sum of the two largest b(c)); leaves have b = 1.
    """
    b = _binary_values(T)
    out: list[int] = []
    stack = [0]
    while stack:
        v = stack.pop()
        kids = T.children[v]
        if not kids:
            out.append(T.leaf_index(v))
            continue
        pick = _binary_choice(kids, b, b[v])
        stack.extend(reversed(pick))
    return b[0], LeafSubset(tuple(out))


def _binary_choice(kids: Sequence[int], b: Sequence[int], target: int) -> tuple[int, ...]:
    # candidates compare lexicographically by their first child, then the second
    for i, c in enumerate(kids):
        if b[c] == target:
            return (c,)
        for c2 in kids[i + 1:]:
            if b[c] + b[c2] == target:
                return (c, c2)
    raise InvariantViolation("no child combination reproduces the binary DP value")


def _low_table(T: FiberTree, max_budget: int) -> list[list[int]]:
    """D[v][B] for B = 0..max_budget."""
    n = len(T)
    width = max_budget + 1
    D: list[list[int]] = [None] * n  # type: ignore[list-item]
    ones = [1] * width
    for v in reversed(range(n)):
        kids = T.children[v]
        if not kids:
            D[v] = ones
            continue
        if len(kids) == 1:
            D[v] = D[kids[0]]
            continue
        rows = [D[c] for c in kids]
        best_single = [max(col) for col in zip(*rows)]
        summed = [sum(col) for col in zip(*rows)]
        row = [best_single[0]]
        for B in range(1, width):
            s = summed[B - 1]
            row.append(s if s > best_single[B] else best_single[B])
        D[v] = row
    return D


def low_subtree_profile(T: FiberTree) -> tuple[int, ...]:
    """Largest low-subtree leaf count at the root for every budget 0..branch depth."""
    return tuple(_low_table(T, branch_depth(T))[0])


def max_low_subtree(T: FiberTree, budget: int) -> tuple[int, LeafSubset]:
    """Largest leaf subset whose LCA-closure has branch depth <= budget.

    D(v, B) = max(max_c D(c, B), sum_c D(c, B-1) if B >= 1), leaves give 1.
    The witness is the lexicographically smallest optimal subset.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    budget = min(budget, branch_depth(T))
    D = _low_table(T, budget)
    return D[0][budget], LeafSubset(_low_witness(T, D, 0, budget, {}))


def _low_witness(T: FiberTree, D, v: int, B: int, memo: dict) -> tuple[int, ...]:
    key = (v, B)
    if key in memo:
        return memo[key]
    # follow unary chains without recursion
    while len(T.children[v]) == 1:
        v = T.children[v][0]
    kids = T.children[v]
    if not kids:
        res = (T.leaf_index(v),)
    else:
        target = D[v][B]
        cands = []
        if B >= 1 and sum(D[c][B - 1] for c in kids) == target:
            cands.append(("all", None))
        for c in kids:
            if D[c][B] == target:
                cands.append(("one", c))
                break  # later single children start further right
        if not cands:
            raise InvariantViolation("no option reproduces the low-subtree DP value")
        best = None
        for kind, c in cands:
            if kind == "all":
                w = tuple(x for c2 in kids for x in _low_witness(T, D, c2, B - 1, memo))
            else:
                w = _low_witness(T, D, c, B, memo)
            if best is None or w < best:
                best = w
        res = best
    memo[key] = res
    return res


def low_budget(N: int, eps: Fraction) -> int:
    """floor(eps * log2 N), the branch-depth budget of an eps-low subtree."""
    return floor_eps_log2(N, eps)


def epsilon_low_max(T: FiberTree, eps: Fraction) -> tuple[int, LeafSubset]:
    """D_eps(T) with N = |L(T)|."""
    eps = check_epsilon(eps)
    return max_low_subtree(T, low_budget(T.leaf_count, eps))


# -- constructive alternative --------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    witness: LeafSubset
    depth: int
    budget: int
    binary_max: int
    leaf_count: int
    epsilon: Fraction

    @property
    def size(self) -> int:
        return len(self.witness)

    def guarantee_holds(self) -> bool:
        """|W| * b**(1/eps) >= N, compared as integers."""
        return pow_ratio_ge(self.size, self.binary_max, self.leaf_count, self.epsilon)


def constructive_decompose(T: FiberTree, eps: Fraction) -> Decomposition:
    """Replay the induction behind the low-vs-binary alternative.

    At each branching node children are split into small (N_i <= 2**(-1/eps) N)
    and big ones. No big child: keep every child's piece under the root. Two or
    more big children: recurse into the big child of smaller b. One big child:
    keep its piece if it already meets the bound, otherwise take the union of
    the small children's pieces. Each returned piece W at node v is checked
    against |W| * b(v)**(1/eps) >= N_v and depth <= floor(eps log2 N_v); a
    failure raises InvariantViolation.
    """
    eps = check_epsilon(eps)
    p, q = eps.numerator, eps.denominator
    b = _binary_values(T)

    # child i is big when N_i > 2**(-1/eps) * N, i.e. 2**q * N_i**p > N**p

    counts = [T.leaf_hi[v] - T.leaf_lo[v] for v in range(len(T))]
    result: list = [None] * len(T)
    for v in reversed(range(len(T))):
        kids = T.children[v]
        if not kids:
            result[v] = ([T.leaf_index(v)], 0)
            continue
        if len(kids) == 1:
            result[v] = result[kids[0]]
            result[kids[0]] = None
            continue
        N = counts[v]
        Np = N**p
        big = [c for c in kids if (counts[c] ** p << q) > Np]
        if not big:
            parts = [result[c] for c in kids]
        elif len(big) >= 2:
            c = min(big, key=lambda x: (b[x], x))
            parts = [result[c]]
        else:
            W1 = result[big[0]]
            if pow_ratio_ge(len(W1[0]), b[v], N, eps):
                parts = [W1]
            else:
                parts = [result[c] for c in kids if c != big[0]]
        for c in kids:
            result[c] = None
        if len(parts) == 1:
            leaves, depth = parts[0]
        else:
            leaves = [x for part in parts for x in part[0]]
            depth = max(part[1] for part in parts) + 1
        if not pow_ratio_ge(len(leaves), b[v], N, eps) or depth > floor_eps_log2(N, eps):
            raise InvariantViolation(
                f"alternative failed at node {v}: |W|={len(leaves)}, b={b[v]}, N={N}, depth={depth}")
        result[v] = (leaves, depth)

    leaves, depth = result[0]
    N = T.leaf_count
    return Decomposition(LeafSubset(tuple(leaves)), depth, floor_eps_log2(N, eps), b[0], N, eps)


# -- brute-force oracle ----------------------------------------------------------


def _lex_key(masks: np.ndarray, n: int) -> np.ndarray:
    # among equal-size subsets, lexicographically smaller sorted tuples have the
    # larger value once leaf i carries weight 2**(n-1-i)
    rev = np.zeros_like(masks)
    for i in range(n):
        rev |= ((masks >> i) & 1) << (n - 1 - i)
    return rev


def _mask_to_leaves(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def brute_force_tree_stats(T: FiberTree) -> TreeStats:
    """Exhaustive enumeration of all non-empty leaf subsets (at most 14 leaves)."""
    n = T.leaf_count
    if n > BRUTE_FORCE_MAX_LEAVES:
        raise ResourceCapExceeded(f"brute force is limited to {BRUTE_FORCE_MAX_LEAVES} leaves, tree has {n}")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    size = np.zeros(len(masks), dtype=np.int64)
    for i in range(n):
        size += (masks >> i) & 1
    node_mask = [0] * len(T)
    for v in range(len(T)):
        node_mask[v] = ((1 << T.leaf_hi[v]) - 1) ^ ((1 << T.leaf_lo[v]) - 1)
    # number of children of v whose subtree meets the subset
    hits = {}
    for v in range(len(T)):
        kids = T.children[v]
        if len(kids) >= 2:
            cnt = np.zeros(len(masks), dtype=np.int64)
            for c in kids:
                cnt += (masks & node_mask[c]) != 0
            hits[v] = cnt
    binary_ok = np.ones(len(masks), dtype=bool)
    for cnt in hits.values():
        binary_ok &= cnt <= 2
    depth = np.zeros(len(masks), dtype=np.int64)
    for l, leaf in enumerate(T.leaf_nodes):
        branching = np.zeros(len(masks), dtype=np.int64)
        for u in T.path_to_root(leaf):
            if u in hits:
                branching += hits[u] >= 2
        in_subset = ((masks >> l) & 1).astype(bool)
        depth = np.maximum(depth, np.where(in_subset, branching, 0))
    lex = _lex_key(masks, n)

    def best(ok: np.ndarray) -> tuple[int, tuple[int, ...]]:
        top = int(size[ok].max())
        sel = ok & (size == top)
        m = int(masks[sel][np.argmax(lex[sel])])
        return top, _mask_to_leaves(m, n)

    b, bw = best(binary_ok)
    d = branch_depth(T)
    lows, witnesses = [], []
    for B in range(d + 1):
        val, w = best(depth <= B)
        lows.append(val)
        witnesses.append(w)
    return TreeStats(n, d, b, bw, tuple(lows), tuple(witnesses))


def tree_stats(T: FiberTree) -> TreeStats:
    """The same statistics as the oracle, computed by the DPs."""
    d = branch_depth(T)
    b, bw = max_binary_subtree(T)
    D = _low_table(T, d)
    memo: dict = {}
    lows = tuple(D[0][B] for B in range(d + 1))
    wits = tuple(_low_witness(T, D, 0, B, memo) for B in range(d + 1))
    return TreeStats(T.leaf_count, d, b, bw.leaves, lows, wits)


# -- quasicubes --------------------------------------------------------------------


def quasicube_subset_certificate(U: LatticeSet) -> QuasicubeCertificate | None:
    """Search for a recursive two-valued split of U down to singletons.

    Coordinates constant on U never help, and every coordinate used above a
    fiber is constant on it, so the search state is the point set alone.
    """
    memo: dict[frozenset, QuasicubeCertificate | None] = {}

    def rec(pts: tuple[Point, ...]) -> QuasicubeCertificate | None:
        if len(pts) <= 1:
            return QuasicubeCertificate(len(pts))
        key = frozenset(pts)
        if key in memo:
            return memo[key]
        found = None
        for i in range(len(pts[0])):
            vals = sorted({p[i] for p in pts})
            if len(vals) != 2:
                continue
            left = tuple(p for p in pts if p[i] == vals[0])
            right = tuple(p for p in pts if p[i] == vals[1])
            cl = rec(left)
            if cl is None:
                continue
            cr = rec(right)
            if cr is None:
                continue
            found = QuasicubeCertificate(len(pts), i + 1, tuple(vals), (cl, cr))
            break
        memo[key] = found
        return found

    return rec(U.points)


def verify_quasicube_certificate(U: LatticeSet, cert: QuasicubeCertificate) -> bool:
    """Replay a certificate against U."""
    def rec(pts: list[Point], c: QuasicubeCertificate) -> bool:
        if c.coordinate is None:
            return len(pts) <= 1 and c.size == len(pts)
        if c.size != len(pts) or len(c.values) != 2 or len(c.parts) != 2:
            return False
        j = c.coordinate - 1
        if not 0 <= j < (len(pts[0]) if pts else 0):
            return False
        if sorted({p[j] for p in pts}) != list(c.values):
            return False
        return all(rec([p for p in pts if p[j] == val], part) for val, part in zip(c.values, c.parts))

    return rec(list(U.points), cert)


# -- text dump -----------------------------------------------------------------------


def dump_tree(T: FiberTree) -> str:
    """Indented text: one node per line, ``(j=<coord>, v=<value>)`` labels, points on leaves."""
    lines = []
    stack = [0]
    while stack:
        v = stack.pop()
        indent = "  " * T.node_depth[v]
        lab = T.labels[v]
        text = "root" if v == 0 else (f"(j={lab[0]}, v={lab[1]})" if lab else "node")
        pt = T.points[v]
        if not T.children[v]:
            text += " leaf" + (f" {','.join(map(str, pt))}" if pt is not None else f" #{T.leaf_index(v)}")
        lines.append(indent + text)
        stack.extend(reversed(T.children[v]))
    return "\n".join(lines) + "\n"
