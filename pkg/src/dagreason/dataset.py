"""Serialization and evaluation-suite construction.

Everything on disk is JSONL (one JSON object per line, UTF-8, sorted keys) so
files are byte-reproducible given the same flags and seed. Suites get a
sidecar manifest recording the schema version, the config, and per-cell
counts. 64-bit seeds are serialized as decimal strings because several JSON
consumers mangle large integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .dag import ARITHMETIC, LOGICAL, evaluate, generate_problem
from .render import format_answer, parse_query, render_query, render_reasoning_chain
from .rng import SplitMix64, derive_seed, problem_seed
from .augment import QaPair

SCHEMA_VERSION = 1


class SchemaError(Exception):
    """A JSONL record does not match its documented schema."""

    def __init__(self, path: str, line: int, detail: str):
        super().__init__(f"{path}:{line}: {detail}")
        self.path = path
        self.line = line


EVAL_ITEM_SCHEMA = {
    "id": str,
    "task": str,
    "depth": int,
    "difficulty": int,
    "order_tag": str,
    "redundancy": int,
    "seed": str,
    "query": str,
    "answer": str,
    "chain": str,
    "labels": list,
}

SFT_SCHEMA = {
    "query": str,
    "response": str,
    "source_id": str,
    "augmentation": str,
}

RESPONSE_SCHEMA = {
    "id": str,
    "sample_index": int,
    "paraphrase_index": int,
    "response": str,
}


@dataclass(frozen=True)
class EvalItem:
    id: str
    task: str
    depth: int
    difficulty: int
    order_tag: str
    redundancy: int
    seed: int
    query: str
    answer: str
    chain: str
    labels: tuple[int, ...]

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["seed"] = str(self.seed)
        rec["labels"] = list(self.labels)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "EvalItem":
        return cls(
            id=rec["id"],
            task=rec["task"],
            depth=rec["depth"],
            difficulty=rec["difficulty"],
            order_tag=rec["order_tag"],
            redundancy=rec["redundancy"],
            seed=int(rec["seed"]),
            query=rec["query"],
            answer=rec["answer"],
            chain=rec["chain"],
            labels=tuple(rec["labels"]),
        )


@dataclass(frozen=True)
class EvalSuiteConfig:
    task: str
    depths: tuple[int, ...]
    orders: tuple[str, ...]
    redundancy_levels: tuple[int, ...]
    count: int
    master_seed: int

    def __post_init__(self):
        if self.task not in (ARITHMETIC, LOGICAL):
            raise ValueError(f"unknown task {self.task!r}")
        if not self.depths or not self.orders or not self.redundancy_levels:
            raise ValueError("depths, orders, and redundancy_levels must be nonempty")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


def build_eval_suite(config: EvalSuiteConfig) -> list[EvalItem]:
    """Materialize the (depth x order x redundancy) grid.

    The per-problem seed depends only on (depth index, sample index), so
    order and redundancy cells of a depth reuse the same underlying DAG and
    make controlled comparisons.
    """
    items: list[EvalItem] = []
    for di, depth in enumerate(config.depths):
        for i in range(config.count):
            base_seed = problem_seed(config.master_seed, di * config.count + i)
            for red in config.redundancy_levels:
                problem = generate_problem(config.task, depth, red, base_seed)
                answer = format_answer(config.task, evaluate(problem.dag)[problem.dag.root])
                chain = render_reasoning_chain(problem).text
                for order in config.orders:
                    render_rng = SplitMix64(derive_seed(base_seed, "render", order, red))
                    query = render_query(problem, order, render_rng)
                    items.append(
                        EvalItem(
                            id=f"{config.task}-d{depth}-{order}-r{red}-i{i:04d}",
                            task=config.task,
                            depth=depth,
                            difficulty=problem.difficulty,
                            order_tag=order,
                            redundancy=red,
                            seed=base_seed,
                            query=query.text,
                            answer=answer,
                            chain=chain,
                            labels=tuple(query.labels),
                        )
                    )
    return items


def _dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path: str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_dump_record(record) + "\n")


def read_jsonl(path: str, schema: dict[str, type] | None = None) -> list[dict]:
    """Read JSONL, validating required fields and types when a schema is given."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, i + 1, f"invalid JSON: {exc}") from exc
            if schema is not None:
                for name, typ in schema.items():
                    if name not in rec:
                        raise SchemaError(path, i + 1, f"missing field {name!r}")
                    if not isinstance(rec[name], typ):
                        raise SchemaError(
                            path, i + 1, f"field {name!r} must be {typ.__name__}"
                        )
            records.append(rec)
    return records


def write_suite(path: str, items: list[EvalItem], config: EvalSuiteConfig | None = None) -> None:
    """Write suite JSONL plus a version manifest sidecar at {path}.manifest.json."""
    write_jsonl(path, [item.to_record() for item in items])
    cells: dict[str, int] = {}
    for item in items:
        key = f"d{item.depth}/{item.order_tag}/r{item.redundancy}"
        cells[key] = cells.get(key, 0) + 1
    manifest = {"version": SCHEMA_VERSION, "kind": "eval-suite", "cells": cells}
    if config is not None:
        manifest["config"] = {
            "task": config.task,
            "depths": list(config.depths),
            "orders": list(config.orders),
            "redundancy_levels": list(config.redundancy_levels),
            "count": config.count,
            "master_seed": str(config.master_seed),
        }
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_suite(path: str) -> list[EvalItem]:
    return [EvalItem.from_record(rec) for rec in read_jsonl(path, EVAL_ITEM_SCHEMA)]


def export_sft(corpus: list[QaPair], path: str) -> None:
    """Write an SFT corpus, aborting if any pair's response disagrees with the
    value its query actually evaluates to."""
    from .harness import parse_final_answer

    records = []
    for qa in corpus:
        parsed = parse_query(qa.query)
        reference = parsed.root_value
        answer = parse_final_answer(qa.response, parsed.task)
        if answer.failure is not None or answer.value != reference:
            raise ValueError(
                f"QA pair {qa.source_id!r}: response answer does not match query "
                f"semantics (expected {reference}, response gave {answer.value})"
            )
        records.append(
            {
                "query": qa.query,
                "response": qa.response,
                "source_id": qa.source_id,
                "augmentation": qa.augmentation,
            }
        )
    write_jsonl(path, records)


def read_sft(path: str) -> list[QaPair]:
    return [
        QaPair(rec["query"], rec["response"], rec["source_id"], rec["augmentation"])
        for rec in read_jsonl(path, SFT_SCHEMA)
    ]
