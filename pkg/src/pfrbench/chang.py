"""Chang's moment inequality, lambda_k certificates and sum-product audits.

All lambda-type comparisons are made on powers: a certificate ``lambda_k <= B``
is checked against the uniform-weight estimate as ``E_k <= |A|^k B^k``. The
only genuinely irrational comparisons (sums of k-th roots, the |A|^(2 eps log2 k)
shape) go through certified rational root brackets or interval arithmetic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Iterable, Mapping, Sequence

import mpmath
import sympy

from .exact import (
    CheckResult,
    InvariantViolation,
    ResourceCapExceeded,
    binom2k2,
    check,
    check_epsilon,
    floor_eps_log2,
    fraction_str,
    pow_ratio_ge,
    power_sum_compare,
)
from .lattice import (
    DEFAULT_MAX_SIZE,
    IntSet,
    iterated_product,
    iterated_sumset,
    product_set,
    valuation_map,
)
from .moments import WeightedSet, additive_energy, weighted_moment
from .pfr import beta_lower_from_tree
from .trees import FiberTree, branch_depth, build_fiber_tree, max_binary_subtree, max_low_subtree

ORTHOGONALITY_MAX_K = 3
ORTHOGONALITY_MAX_COMPONENTS = 4


def p_valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("the valuation of 0 is infinite")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PAdicFamily:
    """Components F_j whose frequencies all have p-adic valuation exactly j."""

    p: int
    components: Mapping[int, WeightedSet]
    k: int

    def __post_init__(self) -> None:
        if not sympy.isprime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        for j, F in self.components.items():
            if j < 0:
                raise ValueError(f"component index {j} is negative")
            if len(F) == 0:
                raise ValueError(f"component {j} is empty")
            for n in F.entries:
                if n == 0 or p_valuation(n, self.p) != j:
                    raise ValueError(
                        f"frequency {n} in component {j} does not have {self.p}-adic valuation {j}")
        object.__setattr__(self, "components", dict(sorted(self.components.items())))

    def total(self) -> WeightedSet:
        acc = WeightedSet({})
        for F in self.components.values():
            acc = acc.union(F)
        return acc


@dataclass(frozen=True)
class ChangCheck:
    total_moment: Fraction
    component_moments: tuple[Fraction, ...]
    binom: int
    k: int
    passed: bool
    # rational bound on (C * sum_j M_j^(1/k))^k that settled the comparison
    settled_by: Fraction

    def as_check(self) -> CheckResult:
        return CheckResult(f"chang(k={self.k})", self.total_moment, self.settled_by,
                           "<=", self.passed)


@dataclass(frozen=True)
class LambdaCertificate:
    elements: IntSet
    k: int
    query_bound: int
    bound: int
    tree: FiberTree | None
    energy: int
    check: CheckResult


@dataclass(frozen=True)
class DecompositionCertificate:
    source: IntSet
    epsilon: Fraction
    k: int
    pieces: tuple[IntSet, ...]
    certificates: tuple[LambdaCertificate, ...]
    remainder_sizes: tuple[int, ...]
    binary_proxy: int
    aggregate_bound: int
    checks: tuple[CheckResult, ...]
    shape_comparisons: Mapping[str, bool | None]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass
class SumProductReport:
    elements: IntSet
    K_star: Fraction
    b_star: int
    sumset_sizes: dict[int, int] = field(default_factory=dict)
    product_sizes: dict[int, int] = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)
    info: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "size": len(self.elements),
            "K_star": fraction_str(self.K_star),
            "b_star": self.b_star,
            "sumset_sizes": {str(k): v for k, v in sorted(self.sumset_sizes.items())},
            "product_sizes": {str(k): v for k, v in sorted(self.product_sizes.items())},
            "ledger": [c.to_json() for c in self.checks],
            "info": dict(sorted(self.info.items())),
        }


# -- Chang's proposition -----------------------------------------------------------


def chang_inequality_check(family: PAdicFamily) -> ChangCheck:
    """||sum_j F_j||_{2k}^2 <= C(2k,2) sum_j ||F_j||_{2k}^2, compared as k-th powers."""
    k = family.k
    C = binom2k2(k)
    total = weighted_moment(family.total(), k).value
    parts = tuple(weighted_moment(F, k).value for F in family.components.values())
    ok, bound = power_sum_compare(total, parts, C, k)
    return ChangCheck(total, parts, C, k, ok, bound)


def orthogonality_witness(family: PAdicFamily, k: int | None = None) -> CheckResult:
    """Every 2k-tuple drawn from pairwise distinct components has a nonzero signed sum.

    The smallest index appears once, so the sum has p-valuation exactly that
    index; both facts are checked for every tuple. Fewer than 2k components
    leave nothing to check.
    """
    k = family.k if k is None else k
    comps = family.components
    if k > ORTHOGONALITY_MAX_K or len(comps) > ORTHOGONALITY_MAX_COMPONENTS:
        raise ResourceCapExceeded(
            f"orthogonality enumeration limited to k <= {ORTHOGONALITY_MAX_K} and "
            f"{ORTHOGONALITY_MAX_COMPONENTS} components")
    p = family.p
    freq = {j: list(F.entries) for j, F in comps.items()}
    checked = good = 0
    for idx in permutations(sorted(comps), 2 * k):
        lowest = min(idx)
        for ns in product(*(freq[j] for j in idx)):
            s = sum(ns[:k]) - sum(ns[k:])
            checked += 1
            if s != 0 and p_valuation(s, p) == lowest:
                good += 1
    return check(f"orthogonality(p={p}, k={k})", good, "==", checked)


def random_padic_family(rng: random.Random, p: int, k: int, *, max_components: int = 5,
                        max_frequencies: int = 6, max_index: int = 4, max_unit: int = 40) -> PAdicFamily:
    count = rng.randint(1, max_components)
    indices = rng.sample(range(max_index + 1), min(count, max_index + 1))
    comps = {}
    for j in indices:
        units = [n for n in range(-max_unit, max_unit + 1) if n % p]
        ns = rng.sample(units, rng.randint(1, max_frequencies))
        comps[j] = WeightedSet({p**j * n: Fraction(rng.randint(1, 9), rng.randint(1, 9)) for n in ns})
    return PAdicFamily(p, comps, k)


def triangle_moment_check(W: WeightedSet, parts: Sequence[Iterable[int]], k: int) -> CheckResult:
    """||sum_A||_{2k} <= sum_i ||sum_{A_i}||_{2k}, compared as 2k-th powers."""
    total = weighted_moment(W, k).value
    moments = [weighted_moment(W.restrict(part), k).value for part in parts]
    ok, bound = power_sum_compare(total, moments, 1, 2 * k)
    return CheckResult(f"triangle(k={k})", total, bound, "<=", ok)


# -- lambda certificates -----------------------------------------------------------


def lambda_certificate(A: IntSet, k: int) -> LambdaCertificate:
    """lambda_k(A) <= C(2k,2)^q with q the branch depth of T(Pi(A))."""
    if len(A) == 0 or A.elements[0] <= 0:
        raise ValueError("lambda certificates need a non-empty set of positive integers")
    L, _ = valuation_map(A)
    T = build_fiber_tree(L)
    q = branch_depth(T)
    bound = binom2k2(k) ** q
    energy = additive_energy(A, k)
    # lambda_k >= E_k^(1/k) / |A|, so the bound must satisfy E_k <= |A|^k bound^k
    chk = check(f"E_k <= |A|^k C(2k,2)^(qk) (k={k}, q={q})",
                energy, "<=", len(A) ** k * bound**k)
    return LambdaCertificate(A, k, q, bound, T, energy, chk)


def lambda_union_bound(parts: Sequence[LambdaCertificate]) -> int:
    """lambda_k of a disjoint union is at most the sum of the parts' lambda_k."""
    seen: set[int] = set()
    for c in parts:
        overlap = seen.intersection(c.elements)
        if overlap:
            raise ValueError(f"parts overlap in {sorted(overlap)[:5]}")
        seen.update(c.elements)
    return sum(c.bound for c in parts)


def _log2(x) -> mpmath.iv.mpf:
    return mpmath.iv.log(mpmath.iv.mpf(x)) / mpmath.iv.log(2)


def _iv_le(lhs, rhs) -> bool | None:
    if lhs.b <= rhs.a:
        return True
    if lhs.a > rhs.b:
        return False
    return None


def closing_shape_comparisons(aggregate: int, b: int, n: int, eps: Fraction, k: int) -> dict[str, bool | None]:
    """Compare the aggregate bound with both closing forms of the lambda_k theorem.

    "ten_form":  aggregate <= 10 b^(1/eps) |A|^(2 eps log2 k)
    "four_form": aggregate <= 4 b^(1/eps) C(2k,2)^(eps log2 |A|)
    Decided in interval arithmetic on log2; None when the interval cannot separate.
    """
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = 200
    try:
        e = iv.mpf(eps.numerator) / eps.denominator
        lhs = _log2(aggregate)
        ten = _log2(10) + _log2(b) / e + 2 * e * _log2(k) * _log2(n)
        four = 2 + _log2(b) / e + e * _log2(n) * _log2(binom2k2(k))
        return {"ten_form": _iv_le(lhs, ten), "four_form": _iv_le(lhs, four)}
    finally:
        iv.prec = saved


def cover_decomposition(A: IntSet, eps: Fraction | str, k: int) -> DecompositionCertificate:
    """Peel off maximal eps-low pieces of T(Pi(remainder)) until nothing is left.

    Each piece carries a lambda_k certificate; the aggregate bound is their sum.
    The binary proxy b is the largest b(T(Pi(A_i))) met along the way.
    """
    eps = check_epsilon(eps, allow_one=False)
    if len(A) == 0 or A.elements[0] <= 0:
        raise ValueError("cover_decomposition needs a non-empty set of positive integers")
    remaining = list(A.elements)
    pieces, certs, sizes = [], [], []
    checks = []
    b_proxy = 0
    while remaining:
        R = IntSet(tuple(remaining))
        L, basis = valuation_map(R)
        back = dict(zip(
            (tuple(_valuation_vector(a, basis.primes)) for a in R.elements), R.elements))
        T = build_fiber_tree(L)
        b, _ = max_binary_subtree(T)
        b_proxy = max(b_proxy, b)
        budget = floor_eps_log2(len(R), eps)
        D, witness = max_low_subtree(T, budget)
        piece = IntSet.of(back[pt] for pt in witness.points(T))
        if not pow_ratio_ge(len(piece), b, len(R), eps):
            raise InvariantViolation(f"piece of size {len(piece)} misses the tree alternative bound")
        cert = lambda_certificate(piece, k)
        if cert.query_bound > budget:
            raise InvariantViolation("piece tree is deeper than its budget")
        pieces.append(piece)
        certs.append(cert)
        sizes.append(len(R))
        checks.append(cert.check)
        taken = set(piece.elements)
        remaining = [a for a in remaining if a not in taken]

    aggregate = lambda_union_bound(certs)
    n = len(A)
    energy = additive_energy(A, k)
    checks.append(check(f"E_k(A) <= (|A| * aggregate)^k (k={k})", energy, "<=", (n * aggregate) ** k))
    covered = sorted(x for pc in pieces for x in pc.elements)
    checks.append(check("pieces partition A", len(covered), "==", n))
    if covered != list(A.elements):
        raise InvariantViolation("decomposition pieces do not partition the input")
    shapes = closing_shape_comparisons(aggregate, b_proxy, n, eps, k)
    return DecompositionCertificate(A, eps, k, tuple(pieces), tuple(certs), tuple(sizes), b_proxy,
                                    aggregate, tuple(checks), shapes)


def _valuation_vector(a: int, primes: Sequence[int]) -> list[int]:
    out = []
    for p in primes:
        e = 0
        while a % p == 0:
            a //= p
            e += 1
        out.append(e)
    return out


# -- sum-product ---------------------------------------------------------------------


def product_set_size(A: IntSet, m: int, *, cap: int = DEFAULT_MAX_SIZE) -> int:
    """|A^(m)| for positive integers, computed as |m Pi(A)| in the valuation lattice."""
    L, _ = valuation_map(A)
    return len(iterated_sumset(L, m, cap=cap))


def _info_exponent(size: int, n: int) -> str:
    if n < 2:
        return "undefined"
    return mpmath.nstr(mpmath.log(size) / mpmath.log(n), 12)


def sum_product_report(A: IntSet, k_list: Sequence[int] = (2, 3), t_list: Sequence[int] = (2, 3),
                       eps: Fraction | str = Fraction(1, 2), *, cap: int = DEFAULT_MAX_SIZE) -> SumProductReport:
    """Exact |kA|, |A^(2^t - 1)| and the certified checks tying them to b_star."""
    eps = check_epsilon(eps)
    if len(A) == 0 or A.elements[0] <= 0:
        raise ValueError("sum_product_report needs positive integers")
    n = len(A)
    L, _ = valuation_map(A)
    K_star = Fraction(len(product_set(A, A, cap=cap)), n)
    b_star = beta_lower_from_tree(L).value
    rep = SumProductReport(A, K_star, b_star)
    for k in k_list:
        size = len(iterated_sumset(A, k, cap=cap))
        rep.sumset_sizes[k] = size
        energy = additive_energy(A, k, cap=cap)
        rep.checks.append(check(f"cauchy_schwarz |{k}A| E_{k} >= |A|^{2 * k}", size * energy, ">=", n ** (2 * k)))
    for t in t_list:
        m = 2**t - 1
        size = len(iterated_sumset(L, m, cap=cap))
        rep.product_sizes[m] = size
        if t > 1:
            rep.checks.append(check(f"iterated beta |A^({m})| >= b_star^{t}", size, ">=", b_star**t))
    c = mpmath.mpf("1e-4")
    for k in sorted(set(k_list) | set(rep.product_sizes)):
        if k > 2:
            bk = c * mpmath.log(k, 2) / mpmath.log(mpmath.log(k, 2), 2)
            rep.info[f"b({k}) with c=1e-4"] = mpmath.nstr(bk, 12)
    for k, size in rep.sumset_sizes.items():
        rep.info[f"log|{k}A|/log|A|"] = _info_exponent(size, n)
    for m, size in rep.product_sizes.items():
        rep.info[f"log|A^({m})|/log|A|"] = _info_exponent(size, n)
    rep.info["delta lower bracket log(b_star)/log|A|"] = _info_exponent(b_star, n)
    rep.info["epsilon"] = fraction_str(eps)
    return rep


def smooth_box(P: int, E: int) -> IntSet:
    """All products of primes <= P with every exponent <= E."""
    primes = list(sympy.primerange(2, P + 1))
    out = [1]
    for p in primes:
        out = [a * p**e for a in out for e in range(E + 1)]
    return IntSet.of(out)


def smooth_example_audit(P: int, E: int, k: int, *, cap: int = DEFAULT_MAX_SIZE,
                         brute_force_limit: int = 10**6) -> dict:
    """Box formulas for the smooth-number example against direct enumeration."""
    r = int(sympy.primepi(P))
    if (E + 1) ** r > cap:
        raise ResourceCapExceeded(f"smooth box of size {(E + 1) ** r} exceeds the cap")
    A = smooth_box(P, E)
    box_size = (E + 1) ** r
    box_power = (k * E + 1) ** r
    checks = [check("|A| = (E+1)^pi(P)", len(A), "==", box_size)]
    enumerated = None
    # brute force product enumeration only while |A^(k-1)| * |A| stays small
    if box_size ** min(k, 2) <= brute_force_limit and ((k - 1) * E + 1) ** r * box_size <= brute_force_limit:
        enumerated = len(iterated_product(A, k, cap=cap))
        checks.append(check(f"|A^({k})| = (kE+1)^pi(P)", enumerated, "==", box_power))
    lattice_size = product_set_size(A, k, cap=cap)
    checks.append(check(f"|A^({k})| via valuation lattice", lattice_size, "==", box_power))
    sums = {m: len(iterated_sumset(A, m, cap=cap)) for m in (2, 3)}
    ratio = _info_exponent(box_power, len(A))
    return {
        "P": P,
        "E": E,
        "k": k,
        "primes": r,
        "size": len(A),
        "box_size": box_size,
        "product_size_box": box_power,
        "product_size_enumerated": enumerated,
        "product_size_lattice": lattice_size,
        "sumset_sizes": {str(m): s for m, s in sums.items()},
        "log_ratio": ratio,
        "checks": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks),
    }
