"""Command-line entry points.

Subcommands: gen, augment, eval, grade, vov, probe, roundtrip. Every
generating command takes an explicit seed (no wall-clock seeding) and writes
a manifest JSON next to its output so runs are reproducible byte-for-byte.

Exit codes: 0 success, 1 flag/schema validation, 2 runtime or I/O failure,
3 property violation (roundtrip).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .augment import MODES, AugmentConfig, augment_pair, QaPair
from .client import HttpCompletionClient, OracleClient, RecordedClient, TopoOnlyClient
from .dag import ARITHMETIC, LOGICAL
from .dataset import (
    EvalSuiteConfig,
    RESPONSE_SCHEMA,
    SchemaError,
    build_eval_suite,
    export_sft,
    read_jsonl,
    read_sft,
    read_suite,
    write_jsonl,
    write_suite,
)
from .harness import (
    accuracy_grid,
    grade,
    run_eval,
    vov,
)
from .render import ORDER_TAGS, parse_query, semantic_equal
from .rng import SplitMix64, derive_seed

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_PROPERTY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _write_manifest(out_path: str, command: str, flags: dict) -> None:
    manifest = {
        "tool": "dagreason",
        "tool_version": __version__,
        "command": command,
        "flags": {k: v for k, v in sorted(flags.items())},
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")


def _cmd_gen(args) -> int:
    config = EvalSuiteConfig(
        task=args.task,
        depths=args.depths,
        orders=args.orders,
        redundancy_levels=args.redundancy,
        count=args.count,
        master_seed=args.seed,
    )
    items = build_eval_suite(config)
    if args.sft:
        # one pair per problem: take the first configured order only
        corpus = [
            QaPair(item.query, item.chain, item.id, "none")
            for item in items
            if item.order_tag == config.orders[0]
        ]
        export_sft(corpus, args.out)
        print(f"wrote {len(corpus)} SFT pairs to {args.out}")
    else:
        write_suite(args.out, items, config)
        cells: dict[str, int] = {}
        for item in items:
            key = f"depth={item.depth} order={item.order_tag} redundancy={item.redundancy}"
            cells[key] = cells.get(key, 0) + 1
        for key in sorted(cells):
            print(f"{key}: {cells[key]} items")
        print(f"wrote {len(items)} items to {args.out}")
    _write_manifest(args.out, "gen", vars(args))
    return EXIT_OK


def _cmd_augment(args) -> int:
    pairs = read_sft(args.input)
    config = AugmentConfig(K=args.K, R=args.R, sep=args.sep, mode=args.mode)
    out: list[QaPair] = []
    for i, qa in enumerate(pairs):
        rng = SplitMix64(derive_seed(args.seed, "augment", qa.source_id or str(i), i))
        out.extend(augment_pair(qa, config, rng))
    export_sft(out, args.out)
    expected = len(pairs) * (config.K + 1)
    law = "==" if len(out) == expected else "<="
    print(
        f"augmented {len(pairs)} pairs -> {len(out)} records "
        f"(size law: {len(out)} {law} (K+1)*n = {expected})"
    )
    _write_manifest(args.out, "augment", vars(args))
    return EXIT_OK


def _make_client(args):
    if args.mock:
        if args.mock == "oracle":
            return OracleClient()
        if args.mock == "topo-only":
            return TopoOnlyClient()
        return RecordedClient(args.mock)
    if not args.base_url:
        raise ValueError("either --mock or --base-url is required")
    return HttpCompletionClient(
        base_url=args.base_url,
        api_key_env=args.api_key_env,
        timeout=args.timeout,
        retries=args.retries,
    )


def _cmd_eval(args) -> int:
    items = read_suite(args.suite)
    client = _make_client(args)
    records, summary = run_eval(
        items,
        client,
        mode=args.mode,
        k=args.k,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
        model=args.model,
        samples=args.samples,
        concurrency=args.concurrency,
        retries=args.retries,
    )
    write_jsonl(args.out, records)
    _write_manifest(args.out, "eval", vars(args))
    print(f"completed {len(records)}/{summary.total_requests} requests -> {args.out}")
    if summary.failed:
        for failure in summary.failed:
            print(f"FAILED id={failure['id']} paraphrase={failure['paraphrase_index']}: "
                  f"{failure['error']}", file=sys.stderr)
        print(f"{len(summary.failed)} requests failed after retries", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_grade(args) -> int:
    from .figures import accuracy_grid_figure

    items = read_suite(args.suite)
    responses = read_jsonl(args.responses, RESPONSE_SCHEMA)
    records, accuracy = grade(items, responses)
    grid = accuracy_grid(items, records)

    prefix = args.out_prefix
    write_jsonl(
        prefix + ".grades.jsonl",
        [
            {
                "id": r.id,
                "sample_index": r.sample_index,
                "parsed_answer": None if r.parsed_answer is None else str(r.parsed_answer),
                "correct": r.correct,
                "failure": r.failure,
            }
            for r in records
        ],
    )
    failures: dict[str, int] = {}
    for r in records:
        if r.failure:
            failures[r.failure] = failures.get(r.failure, 0) + 1
    summary = {
        "accuracy": accuracy,
        "graded": len(records),
        "counts_by_failure": failures,
        "grid": {f"{o}|{r}": acc for (o, r), acc in sorted(grid.items())},
    }
    with open(prefix + ".summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")

    orders = sorted({o for o, _ in grid})
    reds = sorted({r for _, r in grid})
    with open(prefix + ".grid.csv", "w", encoding="utf-8") as fh:
        fh.write("order," + ",".join(f"r{r}" for r in reds) + "\n")
        for order in orders:
            row = [f"{grid[(order, r)]:.6f}" if (order, r) in grid else "" for r in reds]
            fh.write(order + "," + ",".join(row) + "\n")
    accuracy_grid_figure(grid, prefix + ".accuracy.png")
    _write_manifest(prefix + ".summary.json", "grade", vars(args))
    print(f"accuracy: {accuracy:.4f} over {len(records)} graded responses")
    return EXIT_OK


def _load_grid(summary_path: str) -> dict[tuple[str, int], float]:
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    grid = {}
    for key, acc in summary["grid"].items():
        order, red = key.rsplit("|", 1)
        grid[(order, int(red))] = acc
    return grid


def _cmd_vov(args) -> int:
    from .figures import vov_figure

    grid = _load_grid(args.summary)
    baseline = None
    if args.baseline:
        baseline = vov(_load_grid(args.baseline))
    report = vov(grid, baseline)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report.to_record(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    vov_figure(report, os.path.splitext(args.out)[0] + ".png")
    _write_manifest(args.out, "vov", vars(args))
    print(f"VoV_o={report.vov_o} VoV_r={report.vov_r} "
          f"normalized=({report.normalized_o}, {report.normalized_r})")
    return EXIT_OK


def _cmd_probe(args) -> int:
    from .figures import probe_figure
    from .probe import (
        build_probe_dataset,
        f1_macro,
        knn_probe,
        load_dump,
        predict_batch,
        train_linear_probe,
    )

    def load_dir(path: str):
        files = sorted(
            os.path.join(path, f) for f in os.listdir(path) if f.endswith(".json")
        )
        if not files:
            raise ValueError(f"no dump files in {path}")
        return [load_dump(f) for f in files]

    X_train, y_train = build_probe_dataset(load_dir(args.train_dumps))
    X_test, y_test = build_probe_dataset(load_dir(args.test_dumps))

    scores: dict[str, float] = {}
    if args.method in ("linear", "both"):
        probe = train_linear_probe(X_train, y_train, lr=args.lr, epochs=args.epochs, l2=args.l2)
        scores["linear"] = f1_macro(y_test.tolist(), predict_batch(probe, X_test).tolist())
    if args.method in ("knn", "both"):
        preds = [knn_probe(X_train, y_train, args.k, x) for x in X_test]
        scores["knn"] = f1_macro(y_test.tolist(), preds)
    for name, score in scores.items():
        print(f"F1-macro ({name}): {score:.4f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"f1_macro": scores, "train_examples": len(y_train),
                       "test_examples": len(y_test)}, fh, sort_keys=True, indent=2)
            fh.write("\n")
        probe_figure(scores, os.path.splitext(args.out)[0] + ".png")
        _write_manifest(args.out, "probe", vars(args))
    return EXIT_OK


def _cmd_roundtrip(args) -> int:
    items = read_suite(args.suite)
    violations = 0
    from .harness import parse_final_answer
    from .render import render_parsed_query

    for item in items:
        parsed = parse_query(item.query)
        rerendered = render_parsed_query(parsed)
        reparsed = parse_query(rerendered)
        ok = semantic_equal(parsed, reparsed)
        ok = ok and rerendered == item.query
        ok = ok and parsed.labels == list(item.labels)
        answer = parse_final_answer(f"Thus, the answer is {item.answer}", item.task)
        ok = ok and answer.value == parsed.root_value
        if not ok:
            violations += 1
            print(f"VIOLATION: {item.id}", file=sys.stderr)
    if violations:
        print(f"{violations}/{len(items)} items violated round-trip invariants", file=sys.stderr)
        return EXIT_PROPERTY
    print(f"roundtrip OK: {len(items)} items")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="dagreason", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an evaluation suite or SFT corpus")
    p.add_argument("--task", choices=(ARITHMETIC, LOGICAL), required=True)
    p.add_argument("--depths", type=_int_list, default=(3,))
    p.add_argument("--orders", type=_str_list, default=ORDER_TAGS)
    p.add_argument("--redundancy", type=_int_list, default=(0,))
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sft", action="store_true",
                   help="write query/response pairs instead of an eval suite")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("augment", help="augment an SFT corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--R", type=int, default=2)
    p.add_argument("--sep", default="\n")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("eval", help="collect model responses for a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("direct", "scop"), default="direct")
    p.add_argument("--k", type=int, default=1, help="paraphrases per item in scop mode")
    p.add_argument("--mock", default=None,
                   help="'oracle', 'topo-only', or a transcript JSONL path")
    p.add_argument("--base-url", default=None)
    p.add_argument("--model", default="")
    p.add_argument("--api-key-env", default="OPENAI_API_KEY")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-tokens", type=int, default=1024)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--timeout", type=float, default=120.0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("grade", help="grade responses and report accuracy")
    p.add_argument("--suite", required=True)
    p.add_argument("--responses", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_grade)

    p = sub.add_parser("vov", help="variance-of-variations report from a grade summary")
    p.add_argument("--summary", required=True)
    p.add_argument("--baseline", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_vov)

    p = sub.add_parser("probe", help="train/evaluate statement-relevance probes on dumps")
    p.add_argument("--train-dumps", required=True)
    p.add_argument("--test-dumps", required=True)
    p.add_argument("--method", choices=("linear", "knn", "both"), default="linear")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("roundtrip", help="verify parse/render round-trip over a suite")
    p.add_argument("--suite", required=True)
    p.set_defaults(func=_cmd_roundtrip)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
