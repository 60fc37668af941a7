"""Seeded set generators.

Every generator draws from its own ``random.Random(seed)`` (MT19937), so a
spec and a seed pin the output down exactly on any CPython.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping

from ..chang import smooth_box
from ..lattice import DEFAULT_MAX_SIZE, AnySet, IntSet, LatticeSet

RNG_NAME = "MT19937 (Python random.Random)"

# kind -> (required parameter names, optional parameters with defaults)
KINDS: dict[str, tuple[tuple[str, ...], dict[str, int]]] = {
    "ap": (("start", "step", "len"), {}),
    "gp": (("start", "ratio", "len"), {}),
    "cube": (("d",), {}),
    "random_lattice": (("d", "size"), {"width": 4}),
    "random_int": (("size",), {"low": 1, "high": 1000}),
    "smooth_box": (("P", "E"), {}),
    "dilate_union": (("len", "factor"), {"copies": 2}),
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    parameters: Mapping[str, int] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; choose from {sorted(KINDS)}")
        required, optional = KINDS[self.kind]
        params = dict(optional)
        for name, value in self.parameters.items():
            if name not in required and name not in optional:
                raise ValueError(f"{self.kind} takes no parameter {name!r}")
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"parameter {name} must be an integer")
            params[name] = value
        missing = [n for n in required if n not in params]
        if missing:
            raise ValueError(f"{self.kind} is missing parameters {missing}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        _validate(self.kind, params)
        object.__setattr__(self, "parameters", dict(sorted(params.items())))

    def describe(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.parameters.items())
        return f"{self.kind}({args}) seed={self.seed}"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _validate(kind: str, p: dict[str, int]) -> None:
    if kind == "ap":
        _require(p["len"] >= 1, "ap needs len >= 1")
        _require(p["step"] != 0 or p["len"] == 1, "ap needs a nonzero step")
    elif kind == "gp":
        _require(p["len"] >= 1, "gp needs len >= 1")
        _require(p["start"] != 0, "gp needs a nonzero start")
        _require(abs(p["ratio"]) >= 2, "gp needs |ratio| >= 2")
    elif kind == "cube":
        _require(1 <= p["d"] <= 20, "cube needs 1 <= d <= 20")
    elif kind == "random_lattice":
        _require(1 <= p["d"] <= 16, "random_lattice needs 1 <= d <= 16")
        _require(p["width"] >= 1, "random_lattice needs width >= 1")
        _require(1 <= p["size"] <= min(p["width"] ** p["d"], DEFAULT_MAX_SIZE),
                 "random_lattice size must be between 1 and width^d")
    elif kind == "random_int":
        _require(p["low"] <= p["high"], "random_int needs low <= high")
        _require(1 <= p["size"] <= min(p["high"] - p["low"] + 1, DEFAULT_MAX_SIZE),
                 "random_int size must fit in [low, high]")
    elif kind == "smooth_box":
        _require(p["P"] >= 2 and p["E"] >= 0, "smooth_box needs P >= 2 and E >= 0")
        _require(p["P"] <= 1000 and (p["E"] + 1) <= 64, "smooth_box parameters too large")
    elif kind == "dilate_union":
        _require(p["len"] >= 1 and p["copies"] >= 1, "dilate_union needs len, copies >= 1")
        _require(abs(p["factor"]) >= 2, "dilate_union needs |factor| >= 2")


def _sample_points(rng: random.Random, d: int, width: int, size: int) -> list[tuple[int, ...]]:
    total = width**d
    picks = rng.sample(range(total), size)
    pts = []
    for code in picks:
        pt = []
        for _ in range(d):
            code, r = divmod(code, width)
            pt.append(r)
        pts.append(tuple(pt))
    return pts


def generate(spec: GeneratorSpec) -> AnySet:
    p = spec.parameters
    rng = random.Random(spec.seed)
    kind = spec.kind
    if kind == "ap":
        return IntSet.of(p["start"] + i * p["step"] for i in range(p["len"]))
    if kind == "gp":
        return IntSet.of(p["start"] * p["ratio"] ** i for i in range(p["len"]))
    if kind == "cube":
        return LatticeSet.of(_sample_points(rng, p["d"], 2, 2 ** p["d"]), p["d"])
    if kind == "random_lattice":
        return LatticeSet.of(_sample_points(rng, p["d"], p["width"], p["size"]), p["d"])
    if kind == "random_int":
        return IntSet.of(rng.sample(range(p["low"], p["high"] + 1), p["size"]))
    if kind == "smooth_box":
        return smooth_box(p["P"], p["E"])
    if kind == "dilate_union":
        base = range(p["len"])
        return IntSet.of(p["factor"] ** c * x for c in range(p["copies"]) for x in base)
    raise AssertionError(kind)


def parse_parameters(items: list[str]) -> dict[str, int]:
    """``name=value`` tokens to an integer parameter map."""
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValueError(f"expected name=value, got {item!r}")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise ValueError(f"parameter {name} needs an integer value, got {value!r}") from None
    return out
