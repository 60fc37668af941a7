"""The property suite: seeded corpora, exact checks, per-item ledgers.

Each item is a pure function of (config, golden values). Items draw their
corpora from ``random.Random(f"{seed}:{corpus}")`` so they can run in any
order or in separate processes and still see the same instances.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator

from ..chang import (
    PAdicFamily,
    chang_inequality_check,
    lambda_certificate,
    orthogonality_witness,
    product_set_size,
    random_padic_family,
    smooth_box,
    smooth_example_audit,
)
from ..exact import (
    CheckResult,
    ResourceCapExceeded,
    ceil_div_root,
    check,
    fraction_str,
    parse_fraction,
    pow_ratio_ge,
)
from ..lattice import IntSet, LatticeSet, sumset, valuation_map
from ..moments import WeightedSet, additive_energy, brute_force_energy, weighted_moment
from ..pfr import beta_upper_search, exact_query_complexity, extract_structured_subset, run_query_protocol
from ..trees import (
    brute_force_tree_stats,
    build_fiber_tree,
    constructive_decompose,
    low_subtree_profile,
    max_binary_subtree,
    quasicube_subset_certificate,
    random_tree,
    tree_stats,
    verify_quasicube_certificate,
)
from .config import RunConfig
from .generators import GeneratorSpec, generate

EPSILONS_TREE = (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
EPSILONS_EXTRACT = (Fraction(1, 2), Fraction(1))

DEFAULT_GOLDEN: dict[str, Fraction] = {
    "chang_example_moment": Fraction(6),
    "chang_example_rhs": Fraction(12),
    "iterated_example_b_star": Fraction(2),
    "iterated_example_product_3": Fraction(22),
    "iterated_example_product_7": Fraction(50),
    "smooth_example_size": Fraction(64),
    "smooth_example_product_3": Fraction(1000),
}

STRUCTURED_SPECS = (
    GeneratorSpec("ap", {"start": 0, "step": 1, "len": 40}),
    GeneratorSpec("ap", {"start": 3, "step": 7, "len": 25}),
    GeneratorSpec("gp", {"start": 1, "ratio": 2, "len": 12}),
    GeneratorSpec("gp", {"start": 5, "ratio": 3, "len": 9}),
    GeneratorSpec("cube", {"d": 3}),
    GeneratorSpec("cube", {"d": 6}),
    GeneratorSpec("random_lattice", {"d": 3, "size": 40, "width": 5}, seed=1),
    GeneratorSpec("random_lattice", {"d": 6, "size": 200, "width": 3}, seed=2),
    GeneratorSpec("random_int", {"size": 50, "low": 1, "high": 500}, seed=3),
    GeneratorSpec("smooth_box", {"P": 5, "E": 3}),
    GeneratorSpec("smooth_box", {"P": 7, "E": 1}),
    GeneratorSpec("dilate_union", {"len": 20, "factor": 3, "copies": 3}),
)


@dataclass
class ItemResult:
    item_id: str
    title: str
    instances: int = 0
    checks: list[CheckResult] = field(default_factory=list)
    cap_violations: list[str] = field(default_factory=list)
    info: dict[str, str] = field(default_factory=dict)
    # wall time; kept out of the JSON so reports stay byte-identical
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[str]:
        return [c.claim for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "id": self.item_id,
            "title": self.title,
            "instances": self.instances,
            "pass": self.passed,
            "ledger": [c.to_json() for c in self.checks],
            "cap_violations": list(self.cap_violations),
            "info": dict(sorted(self.info.items())),
        }


class Tally:
    """Counts violations of named checks over many instances."""

    def __init__(self) -> None:
        self.counts: dict[str, list[int]] = {}
        self.first_failure: dict[str, str] = {}

    def record(self, name: str, ok: bool, detail: Callable[[], str] | str = "") -> None:
        entry = self.counts.setdefault(name, [0, 0])
        entry[0] += 1
        if not ok:
            entry[1] += 1
            if name not in self.first_failure:
                self.first_failure[name] = detail() if callable(detail) else detail

    def checks(self) -> list[CheckResult]:
        out = []
        for name, (runs, bad) in self.counts.items():
            out.append(check(f"{name} [violations over {runs} runs]", bad, "==", 0))
        return out

    def into(self, item: ItemResult) -> None:
        item.checks.extend(self.checks())
        for name, detail in self.first_failure.items():
            item.info[f"first failure: {name}"] = detail


def _count(cfg: RunConfig, full: int) -> int:
    return max(1, math.ceil(full * cfg.scale))


def _rng(cfg: RunConfig, corpus: str) -> random.Random:
    return random.Random(f"{cfg.seed}:{corpus}")


def _golden_check(item: ItemResult, golden: dict[str, Fraction], key: str, value) -> None:
    item.checks.append(check(f"golden {key}", Fraction(value), "==", golden[key]))


# -- corpora -----------------------------------------------------------------------


def lattice_corpus(cfg: RunConfig, corpus: str, count: int, *, max_dim: int = 8,
                   max_size: int = 512) -> Iterator[LatticeSet]:
    """Random point clouds, cube subsets and near-full boxes, at least two points each."""
    rng = _rng(cfg, corpus)
    for _ in range(count):
        shape = rng.random()
        if shape < 0.5:
            d = rng.randint(1, max_dim)
            width = rng.randint(2, 6)
            size = rng.randint(2, min(max_size, width**d))
        elif shape < 0.75:
            d = rng.randint(1, min(max_dim, 9))
            width = 2
            size = rng.randint(2, min(max_size, 2**d))
        else:
            d = rng.randint(1, min(max_dim, 4))
            width = rng.randint(2, 5)
            full = min(max_size, width**d)
            size = rng.randint(max(2, full * 3 // 4), full)
        spec = GeneratorSpec("random_lattice", {"d": d, "size": size, "width": width},
                             seed=rng.getrandbits(64))
        yield generate(spec)


def positive_corpus(cfg: RunConfig, corpus: str, count: int, *, max_size: int = 64,
                    smooth_only: bool = False) -> Iterator[IntSet]:
    """Subsets of smooth boxes, random integers, progressions and dilates (all positive)."""
    rng = _rng(cfg, corpus)
    for _ in range(count):
        shape = rng.random() if not smooth_only else 0.0
        if shape < 0.55:
            P = rng.choice((3, 5, 7))
            E = rng.randint(1, 3)
            box = list(smooth_box(P, E))
            size = rng.randint(1, min(max_size, len(box)))
            yield IntSet.of(rng.sample(box, size))
        elif shape < 0.75:
            size = rng.randint(1, max_size)
            yield IntSet.of(rng.sample(range(1, 10_001), size))
        elif shape < 0.9:
            ratio = rng.randint(2, 5)
            yield IntSet.of(rng.randint(1, 9) * ratio**e for e in range(rng.randint(1, 12)))
        else:
            length = rng.randint(1, 16)
            factor = rng.randint(2, 4)
            yield IntSet.of(factor**c * x for c in range(2) for x in range(1, length + 1))


def structured_lattices() -> Iterator[tuple[str, LatticeSet]]:
    """Every structured generator as a lattice set, plus Pi(A) for positive integer ones."""
    for spec in STRUCTURED_SPECS:
        S = generate(spec)
        if isinstance(S, LatticeSet):
            yield spec.describe(), S
            continue
        yield spec.describe(), S.as_lattice()
        if S.elements[0] > 0:
            L, _ = valuation_map(S)
            yield "Pi " + spec.describe(), L


# -- items ---------------------------------------------------------------------------


def item_tree_alternative(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("01_tree_alternative", "low-vs-binary alternative on random trees")
    rng = _rng(cfg, "trees_large")
    tally = Tally()
    for t in range(_count(cfg, 1000)):
        leaves = max(1, min(4096, round(2 ** (12 * rng.random()))))
        T = random_tree(rng, 4096, max_arity=rng.randint(2, 8),
                        max_depth=rng.choice((None, 6, 10, 16)), leaves=leaves)
        N = T.leaf_count
        b, _ = max_binary_subtree(T)
        profile = low_subtree_profile(T)
        item.instances += 1
        for eps in EPSILONS_TREE:
            budget = ((N**eps.numerator).bit_length() - 1) // eps.denominator
            D = profile[min(budget, len(profile) - 1)]
            where = f"tree {t} N={N} b={b} eps={fraction_str(eps)}"
            tally.record("D_eps * b^(1/eps) >= N", pow_ratio_ge(D, b, N, eps), lambda: f"{where} D={D}")
            dec = constructive_decompose(T, eps)
            need = ceil_div_root(N, b, eps)
            tally.record("constructive size >= ceil(N / b^(1/eps))", dec.size >= need,
                         lambda: f"{where} size={dec.size} need={need}")
            tally.record("constructive size <= D_eps", dec.size <= D, lambda: f"{where} size={dec.size} D={D}")
    tally.into(item)
    return item


def item_dp_oracle(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("02_dp_oracle", "tree DPs against exhaustive subset enumeration")
    rng = _rng(cfg, "trees_small")
    tally = Tally()
    for t in range(_count(cfg, 10_000)):
        T = random_tree(rng, cfg.max_tree_leaves, max_arity=rng.randint(2, 5), max_depth=rng.randint(1, 6))
        fast = tree_stats(T)
        slow = brute_force_tree_stats(T)
        item.instances += 1
        tally.record("binary max equals oracle", fast.binary_max == slow.binary_max,
                     lambda: f"shape {T.shape()}")
        tally.record("low max equals oracle at every budget", fast.low_max == slow.low_max,
                     lambda: f"shape {T.shape()}")
        tally.record("witnesses equal oracle (lex-min)",
                     fast.binary_witness == slow.binary_witness and fast.low_witness == slow.low_witness,
                     lambda: f"shape {T.shape()}")
    tally.into(item)
    return item


def item_extraction(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("03_extraction", "structured subset extraction and the query game")
    tally = Tally()
    for idx, A in enumerate(lattice_corpus(cfg, "extract", _count(cfg, 200))):
        if len(A) > cfg.max_set_size:
            item.cap_violations.append(f"set {idx}: |A|={len(A)} exceeds max_set_size")
            continue
        item.instances += 1
        for eps in EPSILONS_EXTRACT:
            try:
                res = extract_structured_subset(A, eps, cap=cfg.max_set_size)
            except ResourceCapExceeded as exc:
                item.cap_violations.append(f"set {idx} eps={fraction_str(eps)}: {exc}")
                continue
            where = f"set {idx} d={A.dimension} |A|={len(A)} eps={fraction_str(eps)}"
            for c in res.checks:
                tally.record(c.claim, c.passed, lambda c=c: f"{where} lhs={c.lhs} rhs={c.rhs}")
            worst = max(len(run_query_protocol(res, x)) for x in res.subset)
            tally.record("every element of A' found within the query budget", worst <= res.query_budget,
                         lambda: f"{where} worst={worst} budget={res.query_budget}")
            if len(res.subset) <= 24:
                q = exact_query_complexity(res.subset)
                tally.record("optimal query complexity <= protocol depth", q <= worst,
                             lambda: f"{where} optimum={q} protocol={worst}")
    tally.into(item)
    return item


def chang_worked_example() -> PAdicFamily:
    return PAdicFamily(2, {0: WeightedSet({1: Fraction(1)}), 1: WeightedSet({2: Fraction(1)})}, 2)


def item_chang(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("04_chang", "Chang's moment inequality on p-adic families")
    rng = _rng(cfg, "padic")
    tally = Tally()
    for t in range(_count(cfg, 200)):
        p = rng.choice((2, 3, 5))
        k = rng.choice((2, 3))
        fam = random_padic_family(rng, p, k)
        res = chang_inequality_check(fam)
        item.instances += 1
        tally.record("total moment <= (C(2k,2) sum_j M_j^(1/k))^k", res.passed,
                     lambda: f"family {t} p={p} k={k}")
        if k == 2 and len(fam.components) <= 4:
            w = orthogonality_witness(fam)
            tally.record("distinct-index cross sums never cancel", w.passed, lambda: f"family {t} p={p}")
    tally.into(item)
    ex = chang_inequality_check(chang_worked_example())
    item.checks.append(ex.as_check())
    _golden_check(item, golden, "chang_example_moment", ex.total_moment)
    # both parts have moment 1, so the powered right side is exactly (6 * (1 + 1))^2
    rhs = ex.binom * sum(1 for _ in ex.component_moments)
    item.checks.append(check("worked example parts are unit moments", sum(ex.component_moments), "==", 2))
    _golden_check(item, golden, "chang_example_rhs", rhs)
    item.checks.append(check("worked example settles at rhs^k", ex.settled_by, "==", rhs**2))
    return item


def item_lambda(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("05_lambda_certificates", "energy bound from the valuation-tree depth")
    tally = Tally()
    for idx, A in enumerate(positive_corpus(cfg, "positive_lambda", _count(cfg, 100))):
        item.instances += 1
        for k in (2, 3):
            cert = lambda_certificate(A, k)
            tally.record("E_k <= |A|^k C(2k,2)^(qk)", cert.check.passed,
                         lambda: f"set {idx} |A|={len(A)} k={k} q={cert.query_bound}")
    tally.into(item)
    return item


def _all_fiber_sets(cfg: RunConfig) -> Iterator[tuple[str, LatticeSet]]:
    for idx, A in enumerate(lattice_corpus(cfg, "extract", _count(cfg, 200))):
        yield f"extract {idx}", A
    for idx, A in enumerate(lattice_corpus(cfg, "doubling", _count(cfg, 500))):
        yield f"doubling {idx}", A
    for idx, A in enumerate(positive_corpus(cfg, "positive_iterated", _count(cfg, 100), smooth_only=True)):
        yield f"Pi iterated {idx}", valuation_map(A)[0]
    yield from structured_lattices()


def item_quasicube(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("06_quasicube", "max binary subtree leaves lie in a quasicube")
    tally = Tally()
    for name, A in _all_fiber_sets(cfg):
        T = build_fiber_tree(A)
        b, witness = max_binary_subtree(T)
        B = LatticeSet.of(witness.points(T), A.dimension)
        cert = quasicube_subset_certificate(B)
        item.instances += 1
        ok = cert is not None and cert.size == b and verify_quasicube_certificate(B, cert)
        tally.record("certificate found and replayed", ok, lambda: f"{name} b={b}")
    tally.into(item)
    return item


def item_doubling(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("07_doubling", "binary subtree size against the doubling constant")
    tally = Tally()
    sets = [(f"lattice {i}", A) for i, A in enumerate(lattice_corpus(cfg, "doubling", _count(cfg, 500)))]
    sets.extend(structured_lattices())
    for name, A in sets:
        try:
            s = len(sumset(A, A, cap=cfg.max_set_size))
        except ResourceCapExceeded as exc:
            item.cap_violations.append(f"{name}: {exc}")
            continue
        b, _ = max_binary_subtree(build_fiber_tree(A))
        n = len(A)
        item.instances += 1
        tally.record("b |A|^2 <= |A+A|^2", b * n * n <= s * s, lambda: f"{name} b={b} |A|={n} |A+A|={s}")
    tally.into(item)
    return item


def _iterated_checks(A: IntSet, cap: int) -> tuple[int, int, int]:
    L, _ = valuation_map(A)
    b, _ = max_binary_subtree(build_fiber_tree(L))
    return b, product_set_size(A, 3, cap=cap), product_set_size(A, 7, cap=cap)


def item_iterated(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("08_iterated_products", "iterated product sets against b_star powers")
    tally = Tally()
    for idx, A in enumerate(positive_corpus(cfg, "positive_iterated", _count(cfg, 100), smooth_only=True)):
        try:
            b, p3, p7 = _iterated_checks(A, cfg.max_set_size)
        except ResourceCapExceeded as exc:
            item.cap_violations.append(f"set {idx}: {exc}")
            continue
        item.instances += 1
        tally.record("|A^(3)| >= b_star^2", p3 >= b * b, lambda: f"set {idx} b={b} |A^(3)|={p3}")
        tally.record("|A^(7)| >= b_star^3", p7 >= b**3, lambda: f"set {idx} b={b} |A^(7)|={p7}")
    tally.into(item)
    b, p3, p7 = _iterated_checks(IntSet.of(2**e for e in range(8)), cfg.max_set_size)
    _golden_check(item, golden, "iterated_example_b_star", b)
    _golden_check(item, golden, "iterated_example_product_3", p3)
    _golden_check(item, golden, "iterated_example_product_7", p7)
    item.checks.append(check("worked example |A^(3)| >= b_star^2", p3, ">=", b * b))
    item.checks.append(check("worked example |A^(7)| >= b_star^3", p7, ">=", b**3))
    return item


def item_smooth(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("09_smooth_box", "smooth box size formulas against enumeration")
    audit = smooth_example_audit(5, 3, 3, cap=cfg.max_set_size)
    item.instances = 1
    for row in audit["checks"]:
        item.checks.append(CheckResult(row["claim"], parse_fraction(row["lhs"]), parse_fraction(row["rhs"]),
                                       row["relation"], row["pass"]))
    item.checks.append(check("product size enumerated", int(audit["product_size_enumerated"] is not None), "==", 1))
    _golden_check(item, golden, "smooth_example_size", audit["size"])
    _golden_check(item, golden, "smooth_example_product_3", audit["product_size_lattice"])
    for m, s in audit["sumset_sizes"].items():
        item.info[f"|{m}A|"] = str(s)
    item.info["log|A^(3)|/log|A|"] = audit["log_ratio"]
    return item


def item_moments(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("10_moment_engine", "moment engine against direct tuple counting")
    rng = _rng(cfg, "moments")
    tally = Tally()
    for idx in range(_count(cfg, 200)):
        size = rng.randint(1, 8)
        A = IntSet.of(rng.sample(range(-20, 21), size))
        item.instances += 1
        for k in (1, 2, 3):
            moment = weighted_moment(WeightedSet.uniform(A), k).value
            energy = additive_energy(A, k)
            brute = brute_force_energy(A, k)
            tally.record("unit-weight moment == E_k == tuple count", moment == energy == brute,
                         lambda: f"set {idx} {list(A)} k={k}: {moment}, {energy}, {brute}")
    tally.into(item)
    return item


def item_beta_search(cfg: RunConfig, golden: dict) -> ItemResult:
    item = ItemResult("11_beta_search", "search for small induced doubling on cube subsets")
    rng = _rng(cfg, "cube_subsets")
    tally = Tally()
    for idx in range(_count(cfg, 50)):
        d = rng.randint(1, 6)
        cube = list(generate(GeneratorSpec("cube", {"d": d})))
        U = LatticeSet.of(rng.sample(cube, rng.randint(1, len(cube))), d)
        try:
            res = beta_upper_search(U, seed=idx, cap=cfg.max_set_size)
        except ResourceCapExceeded as exc:
            item.cap_violations.append(f"subset {idx}: {exc}")
            continue
        item.instances += 1
        n = len(U)
        tally.record("searched squared ratio >= |U|^2", res.squared_ratio >= n * n,
                     lambda: f"subset {idx} d={d} |U|={n} ratio={res.squared_ratio} via {res.witness}")
    tally.into(item)
    item.info["note"] = "a finite search: no counterexample found is not a proof"
    return item


ITEMS: dict[str, Callable[[RunConfig, dict], ItemResult]] = {
    "01_tree_alternative": item_tree_alternative,
    "02_dp_oracle": item_dp_oracle,
    "03_extraction": item_extraction,
    "04_chang": item_chang,
    "05_lambda_certificates": item_lambda,
    "06_quasicube": item_quasicube,
    "07_doubling": item_doubling,
    "08_iterated_products": item_iterated,
    "09_smooth_box": item_smooth,
    "10_moment_engine": item_moments,
    "11_beta_search": item_beta_search,
}


def load_golden(path: str | Path | None) -> tuple[dict[str, Fraction], list[CheckResult]]:
    """Golden values, defaults overridden by ``key = value`` lines; problems become failing checks."""
    golden = dict(DEFAULT_GOLDEN)
    problems: list[CheckResult] = []
    if path is None:
        return golden, problems
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        return golden, [check(f"golden file readable ({exc.strerror})", 0, "==", 1)]
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        try:
            if not sep:
                raise ValueError
            golden[key] = parse_fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            problems.append(check(f"golden file line {lineno} parses", 0, "==", 1))
            continue
        if key not in DEFAULT_GOLDEN:
            problems.append(check(f"golden key {key} is known", 0, "==", 1))
    return golden, problems


def run_item(item_id: str, cfg: RunConfig, golden: dict) -> ItemResult:
    start = time.perf_counter()
    try:
        res = ITEMS[item_id](cfg, golden)
    except ResourceCapExceeded as exc:
        res = ItemResult(item_id, item_id, cap_violations=[str(exc)])
    res.elapsed = time.perf_counter() - start
    return res


def _run_item_args(args: tuple[str, RunConfig, dict]) -> ItemResult:
    return run_item(*args)


def run_suite(cfg: RunConfig) -> tuple[int, list[ItemResult]]:
    """Run the selected items (all by default); exit status 1 iff any exact check fails."""
    ids = list(cfg.items) if cfg.items else list(ITEMS)
    unknown = [i for i in ids if i not in ITEMS]
    if unknown:
        raise ValueError(f"unknown suite items {unknown}; choose from {list(ITEMS)}")
    golden, problems = load_golden(cfg.golden)
    results: list[ItemResult] = []
    if problems:
        results.append(ItemResult("00_golden_file", "golden value file", 1, problems))
    jobs = [(i, cfg, golden) for i in ids]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results.extend(pool.map(_run_item_args, jobs))
    else:
        results.extend(_run_item_args(j) for j in jobs)
    results.sort(key=lambda r: r.item_id)
    status = 0 if all(r.passed for r in results) else 1
    return status, results
