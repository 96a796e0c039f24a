import json

import pytest

from dagreason.augment import QaPair, qa_from_problem
from dagreason.dag import ARITHMETIC, LOGICAL, generate_problem
from dagreason.dataset import (
    EVAL_ITEM_SCHEMA,
    EvalItem,
    EvalSuiteConfig,
    SchemaError,
    build_eval_suite,
    export_sft,
    read_jsonl,
    read_sft,
    read_suite,
    write_jsonl,
    write_suite,
)
from dagreason.render import parse_query
from dagreason.rng import SplitMix64


CONFIG = EvalSuiteConfig(
    task=ARITHMETIC,
    depths=(2, 3),
    orders=("topological", "reversed"),
    redundancy_levels=(0, 2),
    count=3,
    master_seed=7,
)


def test_config_validation():
    with pytest.raises(ValueError):
        EvalSuiteConfig("bogus", (2,), ("topological",), (0,), 1, 0)
    with pytest.raises(ValueError):
        EvalSuiteConfig(ARITHMETIC, (), ("topological",), (0,), 1, 0)
    with pytest.raises(ValueError):
        EvalSuiteConfig(ARITHMETIC, (2,), ("topological",), (0,), 0, 0)


def test_suite_grid_shape_and_ids():
    items = build_eval_suite(CONFIG)
    assert len(items) == 2 * 2 * 2 * 3
    ids = [it.id for it in items]
    assert len(ids) == len(set(ids))
    assert "arithmetic-d2-topological-r0-i0000" in ids
    assert "arithmetic-d3-reversed-r2-i0002" in ids


def test_suite_shares_dag_across_order_and_redundancy():
    items = build_eval_suite(CONFIG)
    by_cell = {(it.depth, it.order_tag, it.redundancy, it.id.split("-i")[1]): it for it in items}
    a = by_cell[(2, "topological", 0, "0000")]
    b = by_cell[(2, "reversed", 2, "0000")]
    assert a.seed == b.seed
    assert a.answer == b.answer
    assert parse_query(a.query).root == parse_query(b.query).root


def test_suite_items_are_internally_consistent():
    for item in build_eval_suite(CONFIG):
        parsed = parse_query(item.query)
        assert str(float(parsed.root_value)) == item.answer
        assert item.chain.endswith(f"Thus, the answer is {item.answer}")
        assert list(parsed.labels) == list(item.labels)
        assert item.redundancy == sum(
            1 for s in parsed.premises
            if s.kind == "dependency" and s.subject not in parsed.relevant
        )


def test_suite_roundtrip_and_manifest(tmp_path):
    items = build_eval_suite(CONFIG)
    path = str(tmp_path / "suite.jsonl")
    write_suite(path, items, CONFIG)
    assert read_suite(path) == items
    manifest = json.loads((tmp_path / "suite.jsonl.manifest.json").read_text())
    assert manifest["version"] == 1
    assert manifest["cells"]["d2/topological/r0"] == 3
    assert manifest["config"]["master_seed"] == "7"
    assert sum(manifest["cells"].values()) == len(items)


def test_suite_build_is_byte_deterministic(tmp_path):
    p1, p2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    write_suite(p1, build_eval_suite(CONFIG), CONFIG)
    write_suite(p2, build_eval_suite(CONFIG), CONFIG)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_seed_survives_decimal_string_roundtrip():
    item = build_eval_suite(CONFIG)[0]
    rec = item.to_record()
    assert isinstance(rec["seed"], str)
    assert EvalItem.from_record(json.loads(json.dumps(rec))) == item


def test_read_jsonl_schema_errors_report_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id":"a","task":"arithmetic"}\nnot json\n')
    with pytest.raises(SchemaError) as err:
        read_jsonl(str(path), EVAL_ITEM_SCHEMA)
    assert err.value.line == 1
    assert "missing field" in str(err.value)

    path.write_text("not json\n")
    with pytest.raises(SchemaError) as err:
        read_jsonl(str(path), None)
    assert err.value.line == 1
    assert "invalid JSON" in str(err.value)


def test_read_jsonl_type_mismatch(tmp_path):
    item = build_eval_suite(CONFIG)[0]
    rec = item.to_record()
    rec["depth"] = "2"
    path = tmp_path / "suite.jsonl"
    write_jsonl(str(path), [rec])
    with pytest.raises(SchemaError) as err:
        read_suite(str(path))
    assert "'depth' must be int" in str(err.value)


def test_read_jsonl_skips_blank_lines(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text('{"x":1}\n\n{"x":2}\n')
    assert read_jsonl(str(path)) == [{"x": 1}, {"x": 2}]


def test_sft_roundtrip(tmp_path):
    corpus = [
        qa_from_problem(generate_problem(LOGICAL, 2, 1, s), f"p{s}", SplitMix64(s))
        for s in range(4)
    ]
    path = str(tmp_path / "sft.jsonl")
    export_sft(corpus, path)
    assert read_sft(path) == corpus


def test_export_sft_aborts_on_inconsistent_pair(tmp_path):
    good = qa_from_problem(generate_problem(ARITHMETIC, 2, 0, 1), "p1", SplitMix64(1))
    bad = QaPair(good.query, good.response.replace(
        good.response.split("\n")[-1], "Thus, the answer is 999999.0"), "p-bad")
    with pytest.raises(ValueError, match="p-bad"):
        export_sft([good, bad], str(tmp_path / "sft.jsonl"))


def test_jsonl_lines_are_compact_and_sorted(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(str(path), [{"b": 1, "a": [1, 2]}])
    assert path.read_text() == '{"a":[1,2],"b":1}\n'
