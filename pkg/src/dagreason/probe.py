"""Attention probing: simplified attention, linear and KNN relevance probes.

A raw dump holds last-token attention (layers x heads x tokens) with token
spans for each premise statement and the question. Simplification mean-pools
over heads, then mean-pools each statement span and max-pools the question
span, giving one column per statement hypernode plus one for the question.
Each statement's across-layer column is the feature vector for a binary
relevant/irrelevant classifier.

Dump file format (version 1): a JSON object with the header fields and the
attention tensor as a base64-encoded little-endian float32 array, row-major
in [layer][head][token] order.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

DUMP_VERSION = 1
ROW_SUM_TOLERANCE = 1e-3
_STD_FLOOR = 1e-6


class DumpFormatError(Exception):
    pass


@dataclass(frozen=True)
class RawAttentionDump:
    id: str
    num_layers: int
    num_heads: int
    num_tokens: int
    last_token_attn: np.ndarray  # (L, H, T) float32
    statement_spans: tuple[tuple[int, int], ...]  # [start, end) token ranges
    question_span: tuple[int, int]
    labels: tuple[int, ...]

    def validate(self) -> None:
        L, H, T = self.num_layers, self.num_heads, self.num_tokens
        if self.last_token_attn.shape != (L, H, T):
            raise DumpFormatError(
                f"dump {self.id}: attention shape {self.last_token_attn.shape} != {(L, H, T)}"
            )
        if len(self.labels) != len(self.statement_spans):
            raise DumpFormatError(f"dump {self.id}: labels/spans length mismatch")
        spans = list(self.statement_spans) + [self.question_span]
        for start, end in spans:
            if not (0 <= start < end <= T):
                raise DumpFormatError(f"dump {self.id}: span [{start},{end}) outside [0,{T})")
        for (s1, e1), (s2, e2) in zip(sorted(spans), sorted(spans)[1:]):
            if s2 < e1:
                raise DumpFormatError(f"dump {self.id}: overlapping spans")
        if np.any(self.last_token_attn < 0):
            raise DumpFormatError(f"dump {self.id}: negative attention weight")
        sums = self.last_token_attn.sum(axis=2)
        if np.any(sums > 1.0 + ROW_SUM_TOLERANCE):
            raise DumpFormatError(f"dump {self.id}: attention row sums exceed 1 + tolerance")


def save_dump(dump: RawAttentionDump, path: str) -> None:
    attn = np.ascontiguousarray(dump.last_token_attn, dtype="<f4")
    record = {
        "version": DUMP_VERSION,
        "id": dump.id,
        "num_layers": dump.num_layers,
        "num_heads": dump.num_heads,
        "num_tokens": dump.num_tokens,
        "statement_spans": [list(s) for s in dump.statement_spans],
        "question_span": list(dump.question_span),
        "labels": list(dump.labels),
        "attention": base64.b64encode(attn.tobytes()).decode("ascii"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, sort_keys=True)
        fh.write("\n")


def load_dump(path: str) -> RawAttentionDump:
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    if record.get("version") != DUMP_VERSION:
        raise DumpFormatError(f"{path}: unsupported dump version {record.get('version')}")
    L, H, T = record["num_layers"], record["num_heads"], record["num_tokens"]
    raw = base64.b64decode(record["attention"])
    attn = np.frombuffer(raw, dtype="<f4")
    if attn.size != L * H * T:
        raise DumpFormatError(f"{path}: attention payload has {attn.size} floats, expected {L * H * T}")
    dump = RawAttentionDump(
        id=record["id"],
        num_layers=L,
        num_heads=H,
        num_tokens=T,
        last_token_attn=attn.reshape(L, H, T),
        statement_spans=tuple(tuple(s) for s in record["statement_spans"]),
        question_span=tuple(record["question_span"]),
        labels=tuple(record["labels"]),
    )
    dump.validate()
    return dump


def simplify_attention(dump: RawAttentionDump) -> np.ndarray:
    """L x (S+1) matrix: head-mean then per-statement token-mean, with
    token-max over the question span as the final column."""
    head_pooled = dump.last_token_attn.mean(axis=1)  # (L, T)
    columns = []
    for start, end in dump.statement_spans:
        if end <= start:
            raise DumpFormatError(f"dump {dump.id}: empty statement span")
        columns.append(head_pooled[:, start:end].mean(axis=1))
    qs, qe = dump.question_span
    if qe <= qs:
        raise DumpFormatError(f"dump {dump.id}: empty question span")
    columns.append(head_pooled[:, qs:qe].max(axis=1))
    return np.stack(columns, axis=1)


def build_probe_dataset(dumps: list[RawAttentionDump]) -> tuple[np.ndarray, np.ndarray]:
    """One example per statement: the statement's across-layer attention
    column (length L) with its relevance bit. Features are raw; z-scoring
    happens inside training with stored statistics."""
    if not dumps:
        raise ValueError("no dumps given")
    L = dumps[0].num_layers
    features, labels = [], []
    for dump in dumps:
        if dump.num_layers != L:
            raise ValueError(
                f"dump {dump.id} has {dump.num_layers} layers, expected {L}"
            )
        simplified = simplify_attention(dump)
        for i in range(len(dump.statement_spans)):
            features.append(simplified[:, i])
            labels.append(dump.labels[i])
    return np.array(features, dtype=np.float64), np.array(labels, dtype=np.int64)


@dataclass(frozen=True)
class LinearProbe:
    w: np.ndarray
    b: float
    feature_mean: np.ndarray
    feature_std: np.ndarray  # floored, strictly positive


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_and_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy + l2*||w||^2 with its analytic gradient."""
    z = X @ w + b
    p = _sigmoid(z)
    eps = 1e-12
    loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    loss += l2 * float(w @ w)
    residual = p - y
    grad_w = X.T @ residual / len(y) + 2.0 * l2 * w
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def train_linear_probe(
    features: np.ndarray,
    labels: np.ndarray,
    lr: float = 0.1,
    epochs: int = 2000,
    l2: float = 1e-4,
    tol: float = 1e-9,
) -> LinearProbe:
    """Full-batch gradient descent from zero init; deterministic.

    Features are z-scored with statistics computed here and stored on the
    probe, so prediction-time inputs go through the same transform.
    """
    y = np.asarray(labels, dtype=np.float64)
    classes = set(np.unique(y).tolist())
    if not {0.0, 1.0} <= classes:
        raise ValueError("training data must contain both classes")
    mean = features.mean(axis=0)
    std = np.maximum(features.std(axis=0), _STD_FLOOR)
    X = (features - mean) / std

    w = np.zeros(X.shape[1])
    b = 0.0
    prev_loss = None
    for _ in range(epochs):
        loss, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y, l2)
        if prev_loss is not None and abs(prev_loss - loss) < tol:
            break
        prev_loss = loss
        w = w - lr * grad_w
        b = b - lr * grad_b
    return LinearProbe(w=w, b=b, feature_mean=mean, feature_std=std)


def predict(probe: LinearProbe, feature: np.ndarray) -> tuple[float, int]:
    """Probability and thresholded bit for one feature vector (strict > 0.5)."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != probe.w.shape:
        raise ValueError(f"feature dimension {feature.shape} != probe dimension {probe.w.shape}")
    x = (feature - probe.feature_mean) / probe.feature_std
    p = float(_sigmoid(np.array([x @ probe.w + probe.b]))[0])
    return p, int(p > 0.5)


def predict_batch(probe: LinearProbe, features: np.ndarray) -> np.ndarray:
    X = (np.asarray(features, dtype=np.float64) - probe.feature_mean) / probe.feature_std
    return (_sigmoid(X @ probe.w + probe.b) > 0.5).astype(np.int64)


def knn_probe(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    k: int,
    feature: np.ndarray,
) -> int:
    """Euclidean k-nearest majority label; ties resolve to label 0."""
    if not 1 <= k <= len(train_features):
        raise ValueError(f"k must be in [1, {len(train_features)}], got {k}")
    distances = np.linalg.norm(train_features - np.asarray(feature, dtype=np.float64), axis=1)
    nearest = np.argsort(distances, kind="stable")[:k]
    positives = int(np.sum(np.asarray(train_labels)[nearest]))
    return int(positives * 2 > k)


def f1_macro(labels, predictions) -> float:
    """Unweighted mean of per-class F1 over classes {0, 1}; a class with
    precision + recall = 0 contributes F1 = 0."""
    y = list(labels)
    p = list(predictions)
    if len(y) != len(p) or not y:
        raise ValueError("labels and predictions must be equal-length and nonempty")
    scores = []
    for cls in (0, 1):
        tp = sum(1 for a, b in zip(y, p) if a == cls and b == cls)
        fp = sum(1 for a, b in zip(y, p) if a != cls and b == cls)
        fn = sum(1 for a, b in zip(y, p) if a == cls and b != cls)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return sum(scores) / 2
