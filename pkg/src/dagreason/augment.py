"""SFT corpus augmentation: MEND, RC-Aug, MEND-RC, and permutation paraphrases.

MEND works purely on query text: split on the delimiter, shuffle the premise
partitions, append freshly sampled redundant partitions, shuffle again, and
rejoin. The preamble (when present as the first partition) and the question
(last partition) are pinned and never shuffled. All transforms preserve the
parsed semantic form, so the paired response stays valid.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dag import Problem, make_redundant_unit, sample_topological_order
from .render import (
    DEFAULT_SEP,
    ParsedQuery,
    _QUESTION_RE,
    PREAMBLE,
    leaf_sentence,
    dependency_sentence,
    parse_query,
    render_query,
    render_chain_for_order,
    render_reasoning_chain,
)
from .rng import SplitMix64

MODE_MEND = "mend"
MODE_RC = "rc"
MODE_MEND_RC = "mend-rc"
MODES = (MODE_MEND, MODE_RC, MODE_MEND_RC)

# attempts spent looking for one more distinct sampled chain before giving up
_DISTINCT_CHAIN_ATTEMPTS = 200


@dataclass(frozen=True)
class AugmentConfig:
    K: int = 4
    R: int = 2
    sep: str = DEFAULT_SEP
    mode: str = MODE_MEND

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")
        if self.R < 0:
            raise ValueError(f"R must be >= 0, got {self.R}")
        if not self.sep:
            raise ValueError("sep must be nonempty")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class QaPair:
    query: str
    response: str
    source_id: str
    augmentation: str = "none"  # none | mend | rc | mend-rc


def qa_from_problem(problem: Problem, source_id: str, rng: SplitMix64) -> QaPair:
    """Vanilla pair: topological-order query, canonical reasoning chain."""
    query = render_query(problem, "topological", rng)
    chain = render_reasoning_chain(problem)
    return QaPair(query=query.text, response=chain.text, source_id=source_id)


def _fresh_name_indices(used_names: set[str]):
    """Yield creation-order indices whose names do not collide with the query."""
    from .dag import node_name

    i = 0
    while True:
        if node_name(i) not in used_names:
            yield i
        i += 1


def _redundant_partition(parsed: ParsedQuery, used: set[str], rng: SplitMix64, sep: str) -> str:
    """One redundant partition: fresh leaves plus their dependency, joined by sep."""
    fresh = _fresh_name_indices(used)
    # make_redundant_unit numbers nodes consecutively from a start index; pick
    # a start whose whole id range is collision-free
    from .dag import node_name

    start = next(fresh)
    while True:
        # max unit size is 3 nodes (two leaves + internal)
        names = [node_name(start + k) for k in range(3)]
        if all(n not in used for n in names):
            break
        start += 1
    unit = make_redundant_unit(parsed.task, start, rng)
    for node in unit.nodes():
        used.add(node.name)
    id_to_name = {n.id: n.name for n in unit.nodes()}
    parts = [leaf_sentence(l.name, l.value) for l in unit.fresh_leaves]
    parts.append(
        dependency_sentence(
            unit.internal.name,
            unit.internal.op,
            tuple(id_to_name[p] for p in unit.internal.parents),
        )
    )
    return sep.join(parts)


def _split_pinned(query: str, sep: str) -> tuple[list[str], list[str], list[str]]:
    """Split a query into (pinned head, shuffleable body, pinned tail)."""
    parts = query.split(sep)
    head: list[str] = []
    tail: list[str] = []
    if parts and parts[0] == PREAMBLE:
        head = [parts[0]]
        parts = parts[1:]
    if parts and _QUESTION_RE.match(parts[-1]):
        tail = [parts[-1]]
        parts = parts[:-1]
    return head, parts, tail


def mend_transform(query: str, R: int, rng: SplitMix64, sep: str = DEFAULT_SEP) -> str:
    """One MEND pass: shuffle partitions, append R redundant partitions, shuffle again."""
    parsed = parse_query(query, sep)
    head, body, tail = _split_pinned(query, sep)
    rng.shuffle(body)
    used = set(parsed.nodes)
    for _ in range(R):
        body.append(_redundant_partition(parsed, used, rng, sep))
    rng.shuffle(body)
    return sep.join(head + body + tail)


def mend_augment(qa: QaPair, config: AugmentConfig, rng: SplitMix64) -> list[QaPair]:
    """Original pair plus K MEND-transformed pairs; responses unchanged."""
    if config.mode != MODE_MEND:
        raise ValueError(f"mend_augment requires mode={MODE_MEND!r}, got {config.mode!r}")
    out = [qa]
    for _ in range(config.K):
        query = mend_transform(qa.query, config.R, rng, config.sep)
        out.append(QaPair(query, qa.response, qa.source_id, MODE_MEND))
    return out


def _distinct_chains(problem: Problem, count: int, rng: SplitMix64, taken: set[str]) -> list[str]:
    """Up to `count` sampled chains whose texts are not in `taken`.

    Rejection sampling with a generous per-chain attempt budget; on DAGs with
    few linear extensions the budget runs out and fewer chains come back.
    """
    out: list[str] = []
    attempts = 0
    while len(out) < count and attempts < _DISTINCT_CHAIN_ATTEMPTS * max(count, 1):
        attempts += 1
        order = sample_topological_order(problem.dag, rng)
        text = render_chain_for_order(problem.dag, problem.task, order).text
        if text not in taken:
            taken.add(text)
            out.append(text)
    return out


def rc_augment(problem: Problem, K: int, rng: SplitMix64, source_id: str = "") -> list[QaPair]:
    """Original pair plus up to K pairs with distinct alternative reasoning
    chains; the query is byte-identical across the group."""
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    original = qa_from_problem(problem, source_id, rng)
    taken = {original.response}
    chains = _distinct_chains(problem, K, rng, taken)
    return [original] + [
        QaPair(original.query, chain, source_id, MODE_RC) for chain in chains
    ]


def rc_augment_qa(qa: QaPair, K: int, rng: SplitMix64, sep: str = DEFAULT_SEP) -> list[QaPair]:
    """RC-Aug for an existing QA pair: alternative chains from the parsed DAG."""
    from .render import problem_from_parsed

    problem = problem_from_parsed(parse_query(qa.query, sep))
    taken = {qa.response}
    chains = _distinct_chains(problem, K, rng, taken)
    return [qa] + [QaPair(qa.query, chain, qa.source_id, MODE_RC) for chain in chains]


def mend_rc_augment(qa: QaPair, config: AugmentConfig, rng: SplitMix64) -> list[QaPair]:
    """Original pair plus K pairs combining fresh MEND query transforms with
    sampled alternative chains (distinct when the DAG permits)."""
    if config.mode != MODE_MEND_RC:
        raise ValueError(f"mend_rc_augment requires mode={MODE_MEND_RC!r}, got {config.mode!r}")
    from .render import problem_from_parsed

    problem = problem_from_parsed(parse_query(qa.query, config.sep))
    out = [qa]
    taken = {qa.response}
    for _ in range(config.K):
        query = mend_transform(qa.query, config.R, rng, config.sep)
        chains = _distinct_chains(problem, 1, rng, taken)
        if chains:
            response = chains[0]
        else:
            order = sample_topological_order(problem.dag, rng)
            response = render_chain_for_order(problem.dag, problem.task, order).text
        out.append(QaPair(query, response, qa.source_id, MODE_MEND_RC))
    return out


def permute_paraphrases(query: str, k: int, rng: SplitMix64, sep: str = DEFAULT_SEP) -> list[str]:
    """k independent premise-order shuffles; preamble and question pinned."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    parse_query(query, sep)  # reject malformed input up front
    head, body, tail = _split_pinned(query, sep)
    out = []
    for _ in range(k):
        shuffled = list(body)
        rng.shuffle(shuffled)
        out.append(sep.join(head + shuffled + tail))
    return out


def augment_pair(qa: QaPair, config: AugmentConfig, rng: SplitMix64) -> list[QaPair]:
    """Dispatch on config.mode."""
    if config.mode == MODE_MEND:
        return mend_augment(qa, config, rng)
    if config.mode == MODE_RC:
        return rc_augment_qa(qa, config.K, rng, config.sep)
    return mend_rc_augment(qa, config, rng)
