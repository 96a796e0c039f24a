"""Last-token attention extraction from a causal LM into dump files.

For each dataset item the query is tokenized, run through the model with
attention outputs enabled, and the attention directed at the final input
token is written out per layer and head, together with token spans for each
premise statement and the question.

Dump file format (version 1): a JSON object with header fields and the
attention tensor as a base64-encoded little-endian float32 array, row-major
in [layer][head][token] order. This matches the probe-side reader exactly.

Attention is taken over the query alone, not query plus generated response.
"""

from __future__ import annotations

import base64
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger("attnbridge")

DUMP_VERSION = 1

# logical queries open with this fixed line; it is not a premise and carries
# no relevance label, so it gets no statement span
PREAMBLE = "The value 1 means True, and the value 0 means False."

_ITEM_FIELDS = {"id": str, "query": str, "labels": list}


class DatasetError(Exception):
    """A dataset line is missing the fields extraction needs."""


@dataclass(frozen=True)
class ExtractionConfig:
    model_id: str
    dataset_path: str
    out_dir: str
    max_length: int = 1024
    device: str = "cpu"
    sep: str = "\n"
    shard_index: int = 0
    shard_count: int = 1

    def __post_init__(self):
        if self.max_length < 1:
            raise ValueError(f"max_length must be >= 1, got {self.max_length}")
        if not 0 <= self.shard_index < self.shard_count:
            raise ValueError(
                f"shard_index must be in [0, {self.shard_count}), got {self.shard_index}"
            )


@dataclass
class ExtractionReport:
    written: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (id, reason)


def read_items(path: str) -> list[dict]:
    """Read dataset JSONL, keeping only the fields extraction uses."""
    items = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{i + 1}: invalid JSON: {exc}") from exc
            for name, typ in _ITEM_FIELDS.items():
                if name not in rec or not isinstance(rec[name], typ):
                    raise DatasetError(f"{path}:{i + 1}: missing or invalid field {name!r}")
            items.append({"id": rec["id"], "query": rec["query"], "labels": rec["labels"]})
    return items


def sentence_char_ranges(query: str, sep: str) -> list[tuple[int, int]]:
    """[start, end) character range of every sep-delimited sentence."""
    ranges = []
    pos = 0
    for sentence in query.split(sep):
        ranges.append((pos, pos + len(sentence)))
        pos += len(sentence) + len(sep)
    return ranges


def char_ranges_to_token_spans(
    char_ranges: list[tuple[int, int]],
    offsets: list[tuple[int, int]],
    item_id: str,
) -> list[tuple[int, int]]:
    """Map character ranges to disjoint token spans.

    A token belongs to the first sentence whose range it overlaps; tokens
    straddling a sentence boundary expand the earlier span outward, which is
    logged. Spans never overlap because the cursor only moves forward.
    """
    spans = []
    cursor = 0
    for cs, ce in char_ranges:
        start = cursor
        while start < len(offsets) and offsets[start][1] <= cs:
            start += 1
        end = start
        while end < len(offsets) and offsets[end][0] < ce:
            end += 1
        if end > start and offsets[end - 1][1] > ce:
            logger.warning(
                "item %s: token [%d,%d) straddles a sentence boundary at char %d; "
                "span expanded outward", item_id, *offsets[end - 1], ce,
            )
        if end <= start:
            raise DatasetError(f"item {item_id}: sentence at chars [{cs},{ce}) maps to no tokens")
        spans.append((start, end))
        cursor = end
    return spans


def compute_spans(
    query: str,
    offsets: list[tuple[int, int]],
    sep: str,
    item_id: str,
) -> tuple[list[tuple[int, int]], tuple[int, int], bool]:
    """Statement spans, question span, and whether a preamble was dropped.

    Statements are every sentence except the preamble (when present) and the
    final question sentence.
    """
    sentences = query.split(sep)
    ranges = sentence_char_ranges(query, sep)
    has_preamble = sentences[0] == PREAMBLE
    spans = char_ranges_to_token_spans(ranges, offsets, item_id)
    body = spans[1:-1] if has_preamble else spans[:-1]
    return body, spans[-1], has_preamble


def last_token_attention(model, input_ids) -> np.ndarray:
    """(L, H, T) float32 attention from the final token, one row per layer/head."""
    import torch

    with torch.no_grad():
        out = model(input_ids=input_ids, output_attentions=True, use_cache=False)
    rows = [layer[0, :, -1, :] for layer in out.attentions]  # (H, T) each
    return torch.stack(rows).to(torch.float32).cpu().numpy()


def write_dump(
    path: str,
    item_id: str,
    attn: np.ndarray,
    statement_spans: list[tuple[int, int]],
    question_span: tuple[int, int],
    labels: list[int],
) -> None:
    payload = np.ascontiguousarray(attn, dtype="<f4")
    record = {
        "version": DUMP_VERSION,
        "id": item_id,
        "num_layers": int(attn.shape[0]),
        "num_heads": int(attn.shape[1]),
        "num_tokens": int(attn.shape[2]),
        "statement_spans": [list(s) for s in statement_spans],
        "question_span": list(question_span),
        "labels": list(labels),
        "attention": base64.b64encode(payload.tobytes()).decode("ascii"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, sort_keys=True)
        fh.write("\n")


def load_model_and_tokenizer(model_id: str, device: str):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    # eager attention: fused kernels (sdpa/flash) do not expose the weights
    model = AutoModelForCausalLM.from_pretrained(model_id, attn_implementation="eager")
    model.to(device)
    model.eval()
    return model, tokenizer


def extract(config: ExtractionConfig, model=None, tokenizer=None) -> ExtractionReport:
    """Run extraction over the configured shard of the dataset.

    `model` and `tokenizer` may be passed in directly (tests, preloaded
    weights); otherwise they are loaded from `config.model_id`.
    """
    import torch

    if model is None or tokenizer is None:
        model, tokenizer = load_model_and_tokenizer(config.model_id, config.device)
    items = read_items(config.dataset_path)
    shard = items[config.shard_index :: config.shard_count]
    os.makedirs(config.out_dir, exist_ok=True)

    report = ExtractionReport()
    for item in shard:
        encoded = tokenizer(
            item["query"],
            return_offsets_mapping=True,
            return_tensors=None,
            add_special_tokens=False,
        )
        ids = encoded["input_ids"]
        if len(ids) > config.max_length:
            reason = f"query tokenizes to {len(ids)} tokens > max_length {config.max_length}"
            logger.warning("skipping item %s: %s", item["id"], reason)
            report.skipped.append((item["id"], reason))
            continue
        statement_spans, question_span, _ = compute_spans(
            item["query"], encoded["offset_mapping"], config.sep, item["id"]
        )
        if len(statement_spans) != len(item["labels"]):
            reason = (
                f"{len(statement_spans)} statement spans but {len(item['labels'])} labels"
            )
            logger.warning("skipping item %s: %s", item["id"], reason)
            report.skipped.append((item["id"], reason))
            continue
        input_ids = torch.tensor([ids], dtype=torch.long, device=config.device)
        attn = last_token_attention(model, input_ids)
        out_path = os.path.join(config.out_dir, f"{item['id']}.json")
        write_dump(out_path, item["id"], attn, statement_spans, question_span, item["labels"])
        report.written.append(out_path)
    return report
