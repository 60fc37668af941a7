"""Exact-arithmetic helpers shared by every module.

Nothing here touches floating point. Quantities defined through real roots
(``x**(1/k)``, ``b**(1/eps)``) are compared after raising both sides to a
common integer power, or, where a sum of roots is unavoidable, through
certified rational root brackets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import sympy

Number = Union[int, Fraction]


class ResourceCapExceeded(RuntimeError):
    """Raised when an intermediate object would exceed a configured size cap."""


class InvariantViolation(AssertionError):
    """A proven inequality failed on concrete data: this is a bug, not bad input."""


@dataclass(frozen=True)
class CheckResult:
    """One exact inequality check with both sides retained for the ledger."""

    claim: str
    lhs: Number
    rhs: Number
    relation: str
    passed: bool

    def to_json(self) -> dict:
        return {
            "claim": self.claim,
            "lhs": fraction_str(self.lhs),
            "rhs": fraction_str(self.rhs),
            "relation": self.relation,
            "pass": self.passed,
        }


def check(claim: str, lhs: Number, relation: str, rhs: Number) -> CheckResult:
    ops = {
        "<=": lambda a, b: a <= b,
        ">=": lambda a, b: a >= b,
        "==": lambda a, b: a == b,
        "<": lambda a, b: a < b,
        ">": lambda a, b: a > b,
    }
    return CheckResult(claim, lhs, rhs, relation, bool(ops[relation](lhs, rhs)))


def fraction_str(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return str(x)


def parse_fraction(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` or an integer. Decimal strings are refused: epsilons must be exact."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if "." in s or "e" in s.lower():
        raise ValueError(f"expected an exact rational 'p/q', got {text!r}")
    return Fraction(s)


def check_epsilon(eps: Fraction, *, allow_one: bool = True) -> Fraction:
    eps = parse_fraction(eps)
    upper_ok = eps <= 1 if allow_one else eps < 1
    if not (eps > 0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise ValueError(f"epsilon must lie in {bound}, got {eps}")
    return eps


def binom2k2(k: int) -> int:
    """C(2k, 2) = k(2k-1)."""
    return k * (2 * k - 1)


def floor_eps_log2(n: int, eps: Fraction) -> int:
    """floor(eps * log2 n) for n >= 1 and rational eps = p/q, exactly.

    floor(p*log2 n) is bit_length(n**p) - 1, and floor(floor(x)/q) == floor(x/q).
    """
    if n < 1:
        raise ValueError("n must be positive")
    p, q = eps.numerator, eps.denominator
    return ((n**p).bit_length() - 1) // q


def pow_ratio_ge(size: int, base: int, total: int, eps: Fraction) -> bool:
    """Decide ``size * base**(1/eps) >= total`` exactly.

    With eps = p/q this is ``size**p * base**q >= total**p``.
    """
    p, q = eps.numerator, eps.denominator
    return size**p * base**q >= total**p


def ceil_div_root(total: int, base: int, eps: Fraction) -> int:
    """Smallest integer m with m * base**(1/eps) >= total."""
    if total <= 0:
        return 0
    p, q = eps.numerator, eps.denominator
    # m**p >= total**p / base**q  <=>  m >= ceil(root_p(total**p / base**q))
    target = total**p
    bq = base**q
    lo, hi = 0, total
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**p * bq >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for non-negative integers."""
    if n < 0:
        raise ValueError("negative radicand")
    if n < 2 or k == 1:
        return n
    if k == 2:
        return math.isqrt(n)
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def root_bracket(x: Fraction, k: int, bits: int) -> tuple[Fraction, Fraction]:
    """Rationals lo <= x**(1/k) <= hi whose gap is at most 2**-bits."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative radicand")
    rn, rd = iroot(x.numerator, k), iroot(x.denominator, k)
    if rn**k == x.numerator and rd**k == x.denominator:
        r = Fraction(rn, rd)
        return r, r
    scale = 1 << bits
    # lo = floor(x**(1/k) * 2**bits) / 2**bits, via an integer root of floor(x * 2**(k*bits))
    m = x.numerator * scale**k // x.denominator
    r = iroot(m, k)
    lo = Fraction(r, scale)
    hi = lo if (lo**k == x) else Fraction(r + 1, scale)
    return lo, hi


def _radical_sum_power(terms: list[Fraction], coeff: Fraction, k: int):
    expr = (sympy.Rational(coeff) * sum(sympy.root(sympy.Rational(t), k) for t in terms)) ** k
    value = sympy.nsimplify(sympy.expand(expr))
    return Fraction(int(value.p), int(value.q)) if value.is_Rational else None


def power_sum_compare(lhs_power: Fraction, terms: Iterable[Fraction], coeff: Number, k: int,
                      *, max_bits: int = 512) -> tuple[bool, Fraction]:
    """Decide ``lhs_power <= (coeff * sum_j terms_j**(1/k))**k`` exactly.

    Each root is bracketed by rationals and the brackets are tightened until
    the comparison settles. Returns the decision and the rational bound that
    settled it: a lower bound on the right side when the inequality holds, an
    upper bound when it fails. A tie is only decidable when every term is a
    perfect k-th power (the brackets collapse) or the radicals combine
    to a rational; otherwise ArithmeticError.
    """
    terms = [Fraction(t) for t in terms]
    coeff = Fraction(coeff)
    lhs_power = Fraction(lhs_power)
    bits = 32
    while True:
        los, his = zip(*(root_bracket(t, k, bits) for t in terms)) if terms else ((), ())
        low = (coeff * sum(los, Fraction(0))) ** k
        high = (coeff * sum(his, Fraction(0))) ** k
        if lhs_power <= low:
            return True, low
        if lhs_power > high:
            return False, high
        if bits >= max_bits:
            # a genuine tie between radicals, e.g. (sqrt 2 + sqrt 8)^2 = 18
            if _radical_sum_power(terms, coeff, k) == lhs_power:
                return True, lhs_power
            raise ArithmeticError("root comparison did not settle; values tie to within 2**-%d" % bits)
        bits *= 2


def power_sum_le(lhs_power: Fraction, terms: Iterable[Fraction], coeff: Number, k: int) -> bool:
    return power_sum_compare(lhs_power, terms, coeff, k)[0]
