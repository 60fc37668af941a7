"""Command line entry point: ``pfrbench <subcommand> ...``.

Exit codes: 0 when every check passes, 1 when an exact check fails, 2 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from ..chang import (
    PAdicFamily,
    chang_inequality_check,
    cover_decomposition,
    lambda_certificate,
    p_valuation,
    random_padic_family,
    sum_product_report,
)
from ..exact import ResourceCapExceeded, check_epsilon, fraction_str
from ..lattice import IntSet, LatticeSet, format_set, product_set, read_set, sumset, valuation_map
from ..moments import WeightedSet, read_weighted
from ..pfr import extract_structured_subset, run_query_protocol
from ..trees import build_fiber_tree, low_subtree_profile, max_binary_subtree
from .config import RunConfig, load_config
from .generators import KINDS, RNG_NAME, GeneratorSpec, generate, parse_parameters
from .report import emit_report, render_table, report_document

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(seed=args.seed)


def _epsilon(args, cfg: RunConfig) -> Fraction:
    return check_epsilon(args.epsilon) if args.epsilon is not None else cfg.epsilon


def _read_input(args):
    if args.input is None:
        raise UsageError("--input is required")
    return read_set(args.input)


def _read_int_input(args) -> IntSet:
    S = _read_input(args)
    if not isinstance(S, IntSet):
        raise UsageError("this command needs a set of integers, one per line")
    return S


def _as_lattice(S) -> LatticeSet:
    return S.as_lattice() if isinstance(S, IntSet) else S


# -- subcommands -----------------------------------------------------------------------


def cmd_generate(args, cfg: RunConfig) -> int:
    spec = GeneratorSpec(args.kind, parse_parameters(args.params), seed=cfg.seed)
    _emit(format_set(generate(spec)), args.out)
    return EXIT_OK


def cmd_analyze(args, cfg: RunConfig) -> int:
    S = _read_input(args)
    L = _as_lattice(S)
    n = len(S)
    T = build_fiber_tree(L)
    b, _ = max_binary_subtree(T)
    s = len(sumset(S, S, cap=cfg.max_set_size))
    doc = {
        "kind": "integers" if isinstance(S, IntSet) else "lattice",
        "dimension": L.dimension,
        "size": n,
        "sumset_size": s,
        "doubling": fraction_str(Fraction(s, n)),
        "fiber_tree": {
            "leaves": T.leaf_count,
            "nodes": len(T),
            "binary_max": b,
            "low_max_by_budget": list(low_subtree_profile(T)),
        },
    }
    if isinstance(S, IntSet) and S.elements[0] > 0:
        P = len(product_set(S, S, cap=cfg.max_set_size))
        V, basis = valuation_map(S)
        VT = build_fiber_tree(V)
        doc["product_size"] = P
        doc["product_doubling"] = fraction_str(Fraction(P, n))
        doc["valuation_tree"] = {
            "primes": list(basis.primes),
            "binary_max": max_binary_subtree(VT)[0],
            "low_max_by_budget": list(low_subtree_profile(VT)),
        }
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_extract(args, cfg: RunConfig) -> int:
    A = _as_lattice(_read_input(args))
    res = extract_structured_subset(A, _epsilon(args, cfg), cap=cfg.max_set_size)
    _emit(_json(res.to_json()), args.out)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_query(args, cfg: RunConfig) -> int:
    A = _as_lattice(_read_input(args))
    try:
        x = tuple(int(c) for c in args.element.split(",") if c.strip())
    except ValueError:
        raise UsageError(f"--element must be comma-separated integers, got {args.element!r}") from None
    if len(x) != A.dimension:
        raise UsageError(f"--element has {len(x)} coordinates, the set lives in dimension {A.dimension}")
    res = extract_structured_subset(A, _epsilon(args, cfg), with_doubling=False)
    try:
        tr = run_query_protocol(res, x)
    except KeyError:
        raise UsageError(f"{args.element} is not in the extracted subset") from None
    doc = {
        "element": list(x),
        "queries": [{"coordinate": j, "answer": v} for j, v in tr.queries],
        "query_count": len(tr),
        "query_budget": res.query_budget,
        "within_budget": len(tr) <= res.query_budget,
    }
    _emit(_json(doc), args.out)
    return EXIT_OK if doc["within_budget"] else EXIT_FAIL


def _family_from_weights(W: WeightedSet, p: int, k: int) -> PAdicFamily:
    comps: dict[int, dict] = {}
    for n, c in W.entries.items():
        if n == 0:
            raise UsageError("frequency 0 has no p-adic valuation")
        comps.setdefault(p_valuation(n, p), {})[n] = c
    return PAdicFamily(p, {j: WeightedSet(e) for j, e in comps.items()}, k)


def _verify_chang(args, cfg: RunConfig) -> tuple[bool, dict]:
    k = args.k if args.k else cfg.k_list[0]
    if args.input is not None:
        fams = [_family_from_weights(read_weighted(args.input), args.prime, k)]
    else:
        rng = random.Random(f"{cfg.seed}:cli-padic")
        fams = [random_padic_family(rng, rng.choice((2, 3, 5)), rng.choice((2, 3))) for _ in range(args.count)]
    rows = []
    for fam in fams:
        res = chang_inequality_check(fam)
        row = res.as_check().to_json()
        row.update(prime=fam.p, k=fam.k, components=list(fam.components))
        rows.append(row)
    return all(r["pass"] for r in rows), {"ledger": rows}


def _verify_lemma52(args, cfg: RunConfig) -> tuple[bool, dict]:
    A = _read_int_input(args)
    ks = [args.k] if args.k else list(cfg.k_list)
    rows = []
    for k in ks:
        cert = lambda_certificate(A, k)
        row = cert.check.to_json()
        row.update(k=k, query_bound=cert.query_bound, bound=cert.bound, energy=cert.energy)
        rows.append(row)
    return all(r["pass"] for r in rows), {"size": len(A), "ledger": rows}


def _verify_cover(args, cfg: RunConfig) -> tuple[bool, dict]:
    A = _read_int_input(args)
    k = args.k if args.k else cfg.k_list[0]
    eps = _epsilon(args, cfg)
    dec = cover_decomposition(A, eps, k)
    doc = {
        "epsilon": fraction_str(dec.epsilon),
        "k": k,
        "size": len(A),
        "pieces": [list(p.elements) for p in dec.pieces],
        "piece_bounds": [c.bound for c in dec.certificates],
        "piece_query_bounds": [c.query_bound for c in dec.certificates],
        "remainder_sizes": list(dec.remainder_sizes),
        "binary_proxy": dec.binary_proxy,
        "aggregate_bound": dec.aggregate_bound,
        "shape_comparisons": {k2: v for k2, v in sorted(dec.shape_comparisons.items())},
        "ledger": [c.to_json() for c in dec.checks],
    }
    return dec.passed, doc


def _verify_sumproduct(args, cfg: RunConfig) -> tuple[bool, dict]:
    A = _read_int_input(args)
    rep = sum_product_report(A, cfg.k_list, (2, 3), _epsilon(args, cfg), cap=cfg.max_set_size)
    return rep.passed, rep.to_json()


VERIFIERS = {
    "chang": _verify_chang,
    "lemma52": _verify_lemma52,
    "cover": _verify_cover,
    "sumproduct": _verify_sumproduct,
}


def cmd_verify(args, cfg: RunConfig) -> int:
    ok, doc = VERIFIERS[args.what](args, cfg)
    doc["pass"] = ok
    _emit(_json(doc), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(args, cfg: RunConfig) -> int:
    from .suite import run_suite

    overrides = {}
    if args.scale is not None:
        overrides["scale"] = Fraction(args.scale)
    if args.items:
        overrides["items"] = tuple(args.items.split(","))
    if args.out is not None:
        overrides["out_dir"] = args.out
    cfg = cfg.with_overrides(**overrides)
    status, results = run_suite(cfg)
    emit_report(results, cfg.out_dir, cfg)
    sys.stdout.write(render_table(report_document(results, cfg)))
    for r in results:
        print(f"{r.item_id}: {r.elapsed:.2f}s", file=sys.stderr)
    return status


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value run configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", type=Path, help="output file (report: output directory)")

    parser = argparse.ArgumentParser(
        prog="pfrbench", description="Exact experiments on sumsets, fiber trees and moment inequalities.",
        epilog=f"Random corpora use {RNG_NAME}.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a generated set")
    p.add_argument("kind", choices=sorted(KINDS))
    p.add_argument("params", nargs="*", metavar="name=value")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", parents=[common], help="doubling and fiber-tree statistics of a set")
    p.add_argument("--input", type=Path, required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("extract", parents=[common], help="extract a structured subset")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--epsilon", help="exact rational p/q in (0, 1]")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("query", parents=[common], help="replay the coordinate query game for one element")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--epsilon", help="exact rational p/q in (0, 1]")
    p.add_argument("--element", required=True, help="comma-separated coordinates")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", parents=[common], help="run one family of exact checks")
    p.add_argument("what", choices=sorted(VERIFIERS))
    p.add_argument("--input", type=Path)
    p.add_argument("--epsilon", help="exact rational p/q")
    p.add_argument("--k", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--prime", type=int, default=2, help="prime for chang with --input weights")
    p.add_argument("--count", type=int, default=200, help="random families for chang without --input")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common], help="run the property suite and write the report")
    p.add_argument("--scale", help="fraction p/q of the full instance counts")
    p.add_argument("--items", help="comma-separated item ids")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (UsageError, ValueError, KeyError, OSError, ZeroDivisionError, ResourceCapExceeded) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"pfrbench: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
