"""Additive energies and L_{2k} moments of positively weighted exponential sums.

For real positive weights c_n the moment of f(x) = sum_n c_n e(nx) is

    ||f||_{2k}^{2k} = sum_s W_k(s)^2,

where W_k is the k-fold convolution of the weights keyed by frequency sum.
Everything is sparse (dicts keyed by the sum) and exact.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping

from .exact import CheckResult, ResourceCapExceeded, check, parse_fraction
from .lattice import DEFAULT_MAX_SIZE, IntSet, iterated_sumset


@dataclass(frozen=True)
class WeightedSet:
    """Distinct integer frequencies with positive rational weights."""

    entries: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {}
        for n, c in self.entries.items():
            c = Fraction(c)
            if c <= 0:
                raise ValueError(f"weight of frequency {n} must be positive, got {c}")
            clean[int(n)] = c
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def uniform(cls, A: IntSet | Iterable[int], weight: Fraction | int = 1) -> "WeightedSet":
        return cls({n: Fraction(weight) for n in A})

    def __len__(self) -> int:
        return len(self.entries)

    def frequencies(self) -> IntSet:
        return IntSet.of(self.entries)

    def l2_squared(self) -> Fraction:
        return sum((c * c for c in self.entries.values()), Fraction(0))

    def is_normalized(self) -> bool:
        return self.l2_squared() == 1

    def scaled(self, t: Fraction) -> "WeightedSet":
        return WeightedSet({n: c * t for n, c in self.entries.items()})

    def restrict(self, keep: Iterable[int]) -> "WeightedSet":
        keep = set(keep)
        return WeightedSet({n: c for n, c in self.entries.items() if n in keep})

    def union(self, other: "WeightedSet") -> "WeightedSet":
        clash = self.entries.keys() & other.entries.keys()
        if clash:
            raise ValueError(f"frequencies {sorted(clash)[:5]} appear in both weighted sets")
        return WeightedSet({**self.entries, **other.entries})


@dataclass(frozen=True)
class RepFunction:
    k: int
    counts: dict[int, int]

    def total(self) -> int:
        return sum(self.counts.values())

    def support(self) -> IntSet:
        return IntSet.of(self.counts)


@dataclass(frozen=True)
class MomentValue:
    value: Fraction
    k: int


@dataclass(frozen=True)
class LambdaLowerEstimate:
    """Uniform weights give lambda_k(A)**k >= E_k(A) / |A|**k.

    Kept as the integer pair (E_k, |A|) so callers can compare in powered form.
    """

    energy: int
    size: int
    k: int

    @property
    def kth_power_bound(self) -> Fraction:
        return Fraction(self.energy, self.size**self.k)

    def at_most(self, bound: int | Fraction) -> bool:
        """True when the lower estimate does not exceed ``bound`` (compared as k-th powers)."""
        return self.kth_power_bound <= Fraction(bound) ** self.k


def _convolve(f: Mapping[int, object], g: Mapping[int, object], cap: int) -> dict:
    out: dict = defaultdict(int)
    for s, a in f.items():
        for t, b in g.items():
            out[s + t] += a * b
        if len(out) > cap:
            raise ResourceCapExceeded(f"convolution support exceeds the cap of {cap}")
    return dict(out)


def _kfold(weights: Mapping[int, object], k: int, cap: int) -> dict:
    if k < 1:
        raise ValueError("k must be at least 1")
    acc = dict(weights)
    for _ in range(k - 1):
        acc = _convolve(acc, weights, cap)
    return acc


def representation_function(A: IntSet, k: int, *, cap: int = DEFAULT_MAX_SIZE) -> RepFunction:
    """r_k(s) = #{(a_1..a_k) in A^k : sum = s} by iterated sparse convolution."""
    counts = _kfold({a: 1 for a in A}, k, cap)
    return RepFunction(k, dict(sorted(counts.items())))


def additive_energy(A: IntSet, k: int, *, cap: int = DEFAULT_MAX_SIZE) -> int:
    """E_k(A) = sum_s r_k(s)^2."""
    if len(A) == 0:
        return 0
    return sum(r * r for r in representation_function(A, k, cap=cap).counts.values())


def weighted_moment(W: WeightedSet, k: int, *, cap: int = DEFAULT_MAX_SIZE) -> MomentValue:
    """||sum_n c_n e(nx)||_{2k}^{2k} for positive rational weights."""
    if len(W) == 0:
        return MomentValue(Fraction(0), k)
    conv = _kfold(W.entries, k, cap)
    return MomentValue(sum((v * v for v in conv.values()), Fraction(0)), k)


def lambda_lower_estimate(A: IntSet, k: int) -> LambdaLowerEstimate:
    if k < 1:
        raise ValueError("k must be at least 1")
    return LambdaLowerEstimate(additive_energy(A, k), len(A), k)


def cauchy_schwarz_check(A: IntSet, k: int, *, cap: int = DEFAULT_MAX_SIZE) -> CheckResult:
    """|kA| * E_k(A) >= |A|^{2k}."""
    size_kA = len(iterated_sumset(A, k, cap=cap))
    energy = additive_energy(A, k, cap=cap)
    return check(f"cauchy_schwarz(k={k})", size_kA * energy, ">=", len(A) ** (2 * k))


def brute_force_energy(A: IntSet, k: int) -> int:
    """Direct count of 2k-tuples with a_1+..+a_k = a_{k+1}+..+a_{2k} (oracle, tiny sets only)."""
    els = list(A)
    return sum(1 for tup in product(els, repeat=2 * k) if sum(tup[:k]) == sum(tup[k:]))


# -- weighted-set files ------------------------------------------------------


def parse_weighted_text(text: str) -> WeightedSet:
    """Lines of ``frequency,numerator/denominator``; '#' comments skipped."""
    entries: dict[int, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            freq, weight = line.split(",")
            n = int(freq)
            c = parse_fraction(weight)
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from None
        if n in entries:
            raise ValueError(f"line {lineno}: duplicate frequency {n}")
        entries[n] = c
    return WeightedSet(entries)


def format_weighted(W: WeightedSet) -> str:
    return "".join(f"{n},{c.numerator}/{c.denominator}\n" for n, c in W.entries.items())


def read_weighted(path: str | Path) -> WeightedSet:
    return parse_weighted_text(Path(path).read_text(encoding="utf-8"))
