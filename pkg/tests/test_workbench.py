import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pfrbench.exact import check
from pfrbench.lattice import LatticeSet
from pfrbench.workbench.config import RunConfig, format_config, load_config, parse_config_text
from pfrbench.workbench.generators import KINDS, RNG_NAME, GeneratorSpec, generate, parse_parameters
from pfrbench.workbench.report import emit_report, render_json, report_document
from pfrbench.workbench.suite import ITEMS, ItemResult, Tally, load_golden, run_suite

QUICK = Fraction(1, 100)


def test_generator_examples():
    assert list(generate(GeneratorSpec("ap", {"start": 0, "step": 1, "len": 5}))) == [0, 1, 2, 3, 4]
    assert list(generate(GeneratorSpec("smooth_box", {"P": 3, "E": 1}))) == [1, 2, 3, 6]
    cube = generate(GeneratorSpec("cube", {"d": 3}))
    assert isinstance(cube, LatticeSet) and len(cube) == 8
    assert list(generate(GeneratorSpec("gp", {"start": 3, "ratio": 2, "len": 4}))) == [3, 6, 12, 24]
    assert list(generate(GeneratorSpec("dilate_union", {"len": 3, "factor": 5}))) == [0, 1, 2, 5, 10]


def test_generator_validation():
    bad = [
        ("nope", {}),
        ("ap", {"start": 0, "step": 1}),
        ("ap", {"start": 0, "step": 1, "len": 0}),
        ("gp", {"start": 1, "ratio": 1, "len": 3}),
        ("cube", {"d": 0}),
        ("random_lattice", {"d": 2, "size": 10, "width": 3}),
        ("random_int", {"size": 5, "low": 1, "high": 3}),
        ("smooth_box", {"P": 1, "E": 2}),
        ("ap", {"start": 0, "step": 1, "len": 3, "extra": 1}),
    ]
    for kind, params in bad:
        with pytest.raises(ValueError):
            GeneratorSpec(kind, params)
    with pytest.raises(ValueError):
        GeneratorSpec("cube", {"d": 2}, seed=-1)


@given(st.integers(0, 2**64 - 1), st.integers(1, 5), st.integers(2, 5))
def test_generators_deterministic(seed, d, width):
    spec = GeneratorSpec("random_lattice", {"d": d, "size": min(10, width**d), "width": width}, seed=seed)
    assert generate(spec) == generate(spec)
    spec = GeneratorSpec("random_int", {"size": 10, "low": -50, "high": 50}, seed=seed)
    A = generate(spec)
    assert A == generate(spec) and len(A) == 10


def test_every_kind_generates():
    samples = {
        "ap": {"start": 1, "step": 2, "len": 3}, "gp": {"start": 1, "ratio": 3, "len": 3},
        "cube": {"d": 2}, "random_lattice": {"d": 2, "size": 3}, "random_int": {"size": 3},
        "smooth_box": {"P": 5, "E": 1}, "dilate_union": {"len": 2, "factor": 2},
    }
    assert set(samples) == set(KINDS)
    for kind, params in samples.items():
        assert len(generate(GeneratorSpec(kind, params, seed=1))) >= 1


def test_parse_parameters():
    assert parse_parameters(["a=1", "b=-2"]) == {"a": 1, "b": -2}
    for bad in (["a"], ["a=x"], ["=3"]):
        with pytest.raises(ValueError):
            parse_parameters(bad)


def test_config_parse_and_round_trip(tmp_path):
    text = "# run\nepsilon = 1/3\nk_list = 2,3\nseed = 9  # trailing\nscale = 1/4\nout_dir = out\n"
    (tmp_path / "c.cfg").write_text(text)
    cfg = load_config(tmp_path / "c.cfg")
    assert cfg.epsilon == Fraction(1, 3) and cfg.k_list == (2, 3) and cfg.seed == 9
    assert cfg.out_dir == tmp_path / "out"
    again = parse_config_text(format_config(cfg))
    assert again == cfg
    assert format_config(again) == format_config(cfg)


@pytest.mark.parametrize("text", [
    "epsilon = 0.5\n", "epsilon = 3/2\n", "max_set_size = 0\n", "bogus = 1\n", "seed = 1\nseed = 2\n",
    "no equals sign\n", "scale = 2\n", "k_list = 0\n", "max_tree_leaves = 20\n",
])
def test_config_rejects(text):
    with pytest.raises(ValueError):
        parse_config_text(text)


def test_empty_report_is_valid(tmp_path):
    jpath, tpath = emit_report([], tmp_path)
    doc = json.loads(jpath.read_text())
    assert doc["items"] == [] and doc["pass"] is True and doc["rng"] == RNG_NAME
    assert "overall: PASS" in tpath.read_text()


def test_single_check_is_one_row(tmp_path):
    item = ItemResult("x", "one", 1, [check("a <= b", Fraction(1, 3), "<=", 1)])
    jpath, tpath = emit_report([item], tmp_path)
    doc = json.loads(jpath.read_text())
    assert doc["items"][0]["ledger"] == [{"claim": "a <= b", "lhs": "1/3", "rhs": "1", "relation": "<=", "pass": True}]
    assert sum("a <= b" in line for line in tpath.read_text().splitlines()) == 1


def test_report_key_order_stable():
    item = ItemResult("z", "t", 0, [], [], {"b": "1", "a": "2"})
    text = render_json(report_document([item]))
    assert text == render_json(json.loads(text))


def test_tally_names_first_failure():
    t = Tally()
    t.record("x", True)
    t.record("x", False, lambda: "case 1")
    t.record("x", False, lambda: "case 2")
    (c,) = t.checks()
    assert c.lhs == 2 and not c.passed
    item = ItemResult("i", "t")
    t.into(item)
    assert item.info["first failure: x"] == "case 1"


def test_golden_loading(tmp_path):
    g, problems = load_golden(None)
    assert g["iterated_example_product_7"] == 50 and not problems
    p = tmp_path / "g.txt"
    p.write_text("smooth_example_size = 65\nnot_a_key = 1\ngarbage\n")
    g, problems = load_golden(p)
    assert g["smooth_example_size"] == 65
    assert [c.claim for c in problems] == ["golden key not_a_key is known", "golden file line 3 parses"]
    _, problems = load_golden(tmp_path / "missing.txt")
    assert problems and not problems[0].passed


def test_suite_quick_pass_and_determinism(tmp_path):
    cfg = RunConfig(scale=QUICK, seed=5)
    status, results = run_suite(cfg)
    assert status == 0
    assert [r.item_id for r in results] == sorted(ITEMS)
    assert all(r.instances >= 1 and r.checks for r in results)
    j1, _ = emit_report(results, tmp_path / "a", cfg)
    _, again = run_suite(cfg)
    j2, _ = emit_report(again, tmp_path / "b", cfg)
    assert j1.read_bytes() == j2.read_bytes()


def test_suite_corrupted_golden_fails_by_name(tmp_path):
    golden = tmp_path / "golden.txt"
    golden.write_text("iterated_example_product_3 = 23\n")
    cfg = RunConfig(scale=QUICK, golden=golden, items=("08_iterated_products",))
    status, results = run_suite(cfg)
    assert status == 1
    (item,) = results
    assert item.failing() == ["golden iterated_example_product_3"]


def test_suite_reports_caps_without_aborting():
    cfg = RunConfig(scale=QUICK, max_set_size=40, items=("03_extraction", "07_doubling", "10_moment_engine"))
    status, results = run_suite(cfg)
    by_id = {r.item_id: r for r in results}
    assert by_id["03_extraction"].cap_violations
    assert by_id["07_doubling"].cap_violations
    assert by_id["10_moment_engine"].passed
    assert status == 0


def test_suite_worker_pool_matches_serial():
    items = ("04_chang", "09_smooth_box", "10_moment_engine")
    serial = run_suite(RunConfig(scale=QUICK, items=items))[1]
    pooled = run_suite(RunConfig(scale=QUICK, items=items, workers=2))[1]
    assert render_json(report_document(serial)) == render_json(report_document(pooled))


def test_unknown_item():
    with pytest.raises(ValueError):
        run_suite(RunConfig(items=("99_nope",)))
