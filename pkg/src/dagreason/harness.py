"""Grading, accuracy grids, Variance of Variations, and SCoP majority voting.

Answers are compared exactly (integers and bits, no float tolerance). VoV is
the population variance of accuracy along one grid axis averaged along the
other; a degenerate axis yields None rather than zero.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import time

from .augment import permute_paraphrases
from .client import ClientError, CompletionClient, CompletionRequest
from .dataset import EvalItem
from .render import ANSWER_MARKER
from .rng import SplitMix64, derive_seed
from .dag import LOGICAL

FAILURE_NO_MARKER = "no-marker"
FAILURE_UNPARSEABLE = "unparseable-value"

_ARITH_TOKEN_RE = re.compile(r"\s*(-?\d+(?:\.\d+)?)")
_LOGIC_TOKEN_RE = re.compile(r"\s*(-?\d+)")


@dataclass(frozen=True)
class ParsedAnswer:
    value: int | None
    failure: str | None = None  # None | no-marker | unparseable-value


def parse_final_answer(text: str, task: str) -> ParsedAnswer:
    """Extract the value after the last "Thus, the answer is" marker.

    Arithmetic accepts exact decimals ("12348" and "12348.0" alike); logical
    accepts only the bits 0 and 1.
    """
    pos = text.rfind(ANSWER_MARKER)
    if pos < 0:
        return ParsedAnswer(None, FAILURE_NO_MARKER)
    tail = text[pos + len(ANSWER_MARKER):]
    if task == LOGICAL:
        m = _LOGIC_TOKEN_RE.match(tail)
        if not m or int(m.group(1)) not in (0, 1):
            return ParsedAnswer(None, FAILURE_UNPARSEABLE)
        return ParsedAnswer(int(m.group(1)))
    m = _ARITH_TOKEN_RE.match(tail)
    if not m:
        return ParsedAnswer(None, FAILURE_UNPARSEABLE)
    value = Fraction(m.group(1))
    if value.denominator != 1:
        return ParsedAnswer(None, FAILURE_UNPARSEABLE)
    return ParsedAnswer(int(value))


def reference_answer(item: EvalItem) -> int:
    """Exact reference value from the item's stored answer string."""
    parsed = parse_final_answer(f"{ANSWER_MARKER} {item.answer}", item.task)
    if parsed.failure is not None:
        raise ValueError(f"item {item.id}: unparseable reference answer {item.answer!r}")
    return parsed.value


@dataclass(frozen=True)
class GradeRecord:
    id: str
    sample_index: int
    parsed_answer: int | None
    correct: int
    failure: str | None


def scop_vote(answers: list[int | None]) -> int:
    """Majority vote over parsed paraphrase answers, failures excluded;
    ties go to the value seen at the earliest paraphrase index."""
    values = [a for a in answers if a is not None]
    if not values:
        raise ValueError("scop_vote requires at least one parsed answer")
    counts: dict[int, int] = {}
    first_seen: dict[int, int] = {}
    for i, v in enumerate(values):
        counts[v] = counts.get(v, 0) + 1
        first_seen.setdefault(v, i)
    best = max(counts.values())
    return min((v for v, c in counts.items() if c == best), key=first_seen.__getitem__)


def grade(items: list[EvalItem], responses: list[dict]) -> tuple[list[GradeRecord], float]:
    """Grade response records against the suite.

    Records with multiple paraphrase indexes per (id, sample) are combined by
    SCoP voting; missing items score incorrect with a no-marker failure.
    """
    by_item = {item.id: item for item in items}
    grouped: dict[tuple[str, int], dict[int, str]] = {}
    sample_indices: set[int] = {0}
    for rec in responses:
        if rec["id"] not in by_item:
            continue
        key = (rec["id"], rec["sample_index"])
        paraphrases = grouped.setdefault(key, {})
        if rec["paraphrase_index"] in paraphrases:
            raise ValueError(
                f"duplicate response for id={rec['id']} sample={rec['sample_index']} "
                f"paraphrase={rec['paraphrase_index']}"
            )
        paraphrases[rec["paraphrase_index"]] = rec["response"]
        sample_indices.add(rec["sample_index"])

    records: list[GradeRecord] = []
    for item in sorted(items, key=lambda it: it.id):
        ref = reference_answer(item)
        for s in sorted(sample_indices):
            paraphrases = grouped.get((item.id, s))
            if s > 0 and paraphrases is None:
                continue  # only grade sample indices the run actually produced
            if not paraphrases:
                records.append(GradeRecord(item.id, s, None, 0, FAILURE_NO_MARKER))
                continue
            parsed = [
                parse_final_answer(paraphrases[p], item.task)
                for p in sorted(paraphrases)
            ]
            answers = [a.value for a in parsed if a.failure is None]
            if not answers:
                # propagate the most specific failure observed
                failure = (
                    FAILURE_UNPARSEABLE
                    if any(a.failure == FAILURE_UNPARSEABLE for a in parsed)
                    else FAILURE_NO_MARKER
                )
                records.append(GradeRecord(item.id, s, None, 0, failure))
                continue
            value = scop_vote(answers)
            records.append(GradeRecord(item.id, s, value, int(value == ref), None))
    accuracy = sum(r.correct for r in records) / len(records) if records else 0.0
    return records, accuracy


def accuracy_grid(items: list[EvalItem], records: list[GradeRecord]) -> dict[tuple[str, int], float]:
    """Mean correctness per (order_tag, redundancy) cell."""
    by_item = {item.id: item for item in items}
    totals: dict[tuple[str, int], list[int]] = {}
    for rec in records:
        item = by_item[rec.id]
        totals.setdefault((item.order_tag, item.redundancy), []).append(rec.correct)
    return {cell: sum(v) / len(v) for cell, v in totals.items()}


@dataclass(frozen=True)
class VovReport:
    vov_o: float | None
    vov_r: float | None
    normalized_o: float | None
    normalized_r: float | None
    accuracy_grid: dict[tuple[str, int], float]

    def to_record(self) -> dict:
        return {
            "vov_o": self.vov_o,
            "vov_r": self.vov_r,
            "normalized_o": self.normalized_o,
            "normalized_r": self.normalized_r,
            "accuracy_grid": {f"{o}|{r}": acc for (o, r), acc in sorted(self.accuracy_grid.items())},
        }

    @classmethod
    def from_record(cls, rec: dict) -> "VovReport":
        grid = {}
        for key, acc in rec["accuracy_grid"].items():
            order, red = key.rsplit("|", 1)
            grid[(order, int(red))] = acc
        return cls(rec["vov_o"], rec["vov_r"], rec.get("normalized_o"), rec.get("normalized_r"), grid)


def _population_variance(values: list[float]) -> float:
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def vov(grid: dict[tuple[str, int], float], baseline: VovReport | None = None) -> VovReport:
    """Variance of Variations over an accuracy grid.

    vov_o: variance across order variants, averaged over redundancy levels.
    vov_r: variance across redundancy levels, averaged over orders.
    Axes with fewer than two entries contribute nothing; if no slice
    qualifies, the statistic is None. Normalization divides by the baseline
    report's values when given.
    """
    orders = sorted({o for o, _ in grid})
    reds = sorted({r for _, r in grid})

    o_variances = []
    for r in reds:
        col = [grid[(o, r)] for o in orders if (o, r) in grid]
        if len(col) >= 2:
            o_variances.append(_population_variance(col))
    r_variances = []
    for o in orders:
        row = [grid[(o, r)] for r in reds if (o, r) in grid]
        if len(row) >= 2:
            r_variances.append(_population_variance(row))

    vov_o = sum(o_variances) / len(o_variances) if o_variances else None
    vov_r = sum(r_variances) / len(r_variances) if r_variances else None

    normalized_o = normalized_r = None
    if baseline is not None:
        if vov_o is not None and baseline.vov_o:
            normalized_o = vov_o / baseline.vov_o
        if vov_r is not None and baseline.vov_r:
            normalized_r = vov_r / baseline.vov_r
    return VovReport(vov_o, vov_r, normalized_o, normalized_r, dict(grid))


MODE_DIRECT = "direct"
MODE_SCOP = "scop"


@dataclass
class RunSummary:
    total_requests: int = 0
    failed: list[dict] = field(default_factory=list)


def run_eval(
    items: list[EvalItem],
    client: CompletionClient,
    mode: str = MODE_DIRECT,
    k: int = 1,
    temperature: float = 0.0,
    max_tokens: int = 1024,
    model: str = "",
    samples: int = 1,
    concurrency: int = 4,
    retries: int = 2,
    backoff: float = 0.0,
) -> tuple[list[dict], RunSummary]:
    """Query the client for every item and return sorted response records.

    SCoP mode sends k premise-permutation paraphrases per item; paraphrase
    sampling is seeded per (item, sample), so results do not depend on thread
    scheduling.
    """
    if mode not in (MODE_DIRECT, MODE_SCOP):
        raise ValueError(f"mode must be direct or scop, got {mode!r}")
    if mode == MODE_SCOP and k < 2:
        raise ValueError(f"scop mode requires k >= 2, got {k}")

    requests_: list[tuple[str, int, int, str]] = []
    for item in items:
        for s in range(samples):
            if mode == MODE_DIRECT:
                requests_.append((item.id, s, 0, item.query))
            else:
                rng = SplitMix64(derive_seed(item.seed, "scop", item.id, s))
                for p, paraphrase in enumerate(permute_paraphrases(item.query, k, rng)):
                    requests_.append((item.id, s, p, paraphrase))

    summary = RunSummary(total_requests=len(requests_))

    def call(task: tuple[str, int, int, str]):
        item_id, s, p, prompt = task
        request = CompletionRequest(
            prompt=prompt, temperature=temperature, max_tokens=max_tokens, model=model
        )
        last_error = None
        for attempt in range(retries + 1):
            if attempt and backoff:
                time.sleep(backoff * (2 ** (attempt - 1)))
            try:
                return {
                    "id": item_id,
                    "sample_index": s,
                    "paraphrase_index": p,
                    "response": client.complete(request),
                }
            except ClientError as exc:
                last_error = exc
        return {"id": item_id, "sample_index": s, "paraphrase_index": p, "error": str(last_error)}

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        results = list(pool.map(call, requests_))

    records = []
    for res in results:
        if "error" in res:
            summary.failed.append(res)
        else:
            records.append(res)
    records.sort(key=lambda r: (r["id"], r["sample_index"], r["paraphrase_index"]))
    return records, summary
