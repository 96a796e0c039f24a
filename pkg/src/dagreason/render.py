"""Surface layer: fixed natural-language templates and their inverse parser.

Rendering maps a problem's semantic DAG to premise sentences, a pinned
question, and a ground-truth reasoning chain. Parsing recovers the semantic
form from any sentence permutation, which makes the symmetry predicate
(``semantic_equal``) computable: two query texts are equivalent exactly when
their parsed root closures coincide.

Template reference (see docs/templates.md for the grammar):

  leaf        "The value of {name} is {value}."
  add         "{name} gets its value by adding together the value of {a} and {b}."
  sub         "{name} gets its value by subtracting the value of {b} from the value of {a}."
  mul         "{name} gets its value by multiplying together the value of {a} and {b}."
  square      "{name} gets its value by squaring the value that {a} has."
  and/or      "The value of {name} equals to ({a} AND {b})."
  not         "The value of {name} equals to (NOT {a})."
  question    "What is the value of {name}?"
  preamble    "The value 1 means True, and the value 0 means False."  (logical only)

The parser additionally accepts the bare leaf form "{name} is {value}." seen
in some logical corpora.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dag import (
    ARITHMETIC,
    LOGICAL,
    Dag,
    Node,
    Op,
    Problem,
    dag_depth,
    difficulty,
    evaluate,
    topological_order,
)
from .rng import SplitMix64

DEFAULT_SEP = "\n"
PREAMBLE = "The value 1 means True, and the value 0 means False."
ANSWER_MARKER = "Thus, the answer is"

ORDER_TOPOLOGICAL = "topological"
ORDER_RANDOM = "random"
ORDER_REVERSED = "reversed"
ORDER_TAGS = (ORDER_TOPOLOGICAL, ORDER_RANDOM, ORDER_REVERSED)


# ---------------------------------------------------------------------------
# errors

class ParseError(Exception):
    """Base for all template-grammar violations."""


class MalformedSentenceError(ParseError):
    def __init__(self, line: int, text: str):
        super().__init__(f"line {line}: sentence does not match any template: {text!r}")
        self.line = line


class DuplicateDefinitionError(ParseError):
    def __init__(self, line: int, name: str):
        super().__init__(f"line {line}: node {name!r} defined more than once")
        self.line = line
        self.name = name


class UndeclaredReferenceError(ParseError):
    def __init__(self, name: str):
        super().__init__(f"node {name!r} is referenced but never declared")
        self.name = name


class MissingQuestionError(ParseError):
    def __init__(self):
        super().__init__("query has no question sentence")


class CyclicDefinitionError(ParseError):
    def __init__(self, detail: str):
        super().__init__(f"cycle among parsed dependencies: {detail}")


# ---------------------------------------------------------------------------
# value formatting

def format_chain_value(task: str, value: int) -> str:
    return f"{value}.0" if task == ARITHMETIC else str(value)


def format_answer(task: str, value: int) -> str:
    return format_chain_value(task, value)


# ---------------------------------------------------------------------------
# rendering

@dataclass(frozen=True)
class PremiseSentence:
    text: str
    subject: str
    kind: str  # "leaf-value" | "dependency"
    relevant: int


@dataclass(frozen=True)
class RenderedQuery:
    preamble: str | None
    premises: tuple[PremiseSentence, ...]
    question: str
    order_tag: str
    sep: str = DEFAULT_SEP

    @property
    def text(self) -> str:
        parts = [] if self.preamble is None else [self.preamble]
        parts.extend(p.text for p in self.premises)
        parts.append(self.question)
        return self.sep.join(parts)

    @property
    def labels(self) -> list[int]:
        return [p.relevant for p in self.premises]


@dataclass(frozen=True)
class ReasoningChain:
    steps: tuple[str, ...]
    final_answer: int
    text: str


def leaf_sentence(name: str, value: int) -> str:
    return f"The value of {name} is {value}."


def dependency_sentence(node_name: str, op: Op, parent_names: tuple[str, ...]) -> str:
    if op is Op.ADD:
        phrase = f"adding together the value of {parent_names[0]} and {parent_names[1]}"
    elif op is Op.SUB:
        phrase = f"subtracting the value of {parent_names[1]} from the value of {parent_names[0]}"
    elif op is Op.MUL:
        phrase = f"multiplying together the value of {parent_names[0]} and {parent_names[1]}"
    elif op is Op.SQUARE:
        phrase = f"squaring the value that {parent_names[0]} has"
    elif op is Op.AND:
        return f"The value of {node_name} equals to ({parent_names[0]} AND {parent_names[1]})."
    elif op is Op.OR:
        return f"The value of {node_name} equals to ({parent_names[0]} OR {parent_names[1]})."
    elif op is Op.NOT:
        return f"The value of {node_name} equals to (NOT {parent_names[0]})."
    else:
        raise ValueError(op)
    return f"{node_name} gets its value by {phrase}."


def question_sentence(root_name: str) -> str:
    return f"What is the value of {root_name}?"


def _node_sentence(node: Node, names: dict[int, str]) -> str:
    if node.is_leaf:
        return leaf_sentence(node.name, node.value)
    return dependency_sentence(node.name, node.op, tuple(names[p] for p in node.parents))


def render_premises(problem: Problem) -> list[PremiseSentence]:
    """One sentence per node: relevant ones in canonical topological order,
    then each redundant unit's leaves followed by its dependency."""
    names = {n.id: n.name for n in problem.all_nodes()}
    out: list[PremiseSentence] = []
    for nid in topological_order(problem.dag):
        node = problem.dag.node(nid)
        kind = "leaf-value" if node.is_leaf else "dependency"
        out.append(PremiseSentence(_node_sentence(node, names), node.name, kind, 1))
    for unit in problem.redundant_units:
        for node in unit.nodes():
            kind = "leaf-value" if node.is_leaf else "dependency"
            out.append(PremiseSentence(_node_sentence(node, names), node.name, kind, 0))
    return out


def render_query(problem: Problem, order_tag: str, rng: SplitMix64) -> RenderedQuery:
    """Render with the requested premise order; preamble and question stay pinned.

    Redundant sentences are inserted at rng-chosen positions among the ordered
    relevant premises in every mode.
    """
    if order_tag not in ORDER_TAGS:
        raise ValueError(f"order_tag must be one of {ORDER_TAGS}, got {order_tag!r}")
    premises = render_premises(problem)
    relevant = [p for p in premises if p.relevant]
    redundant = [p for p in premises if not p.relevant]
    if order_tag == ORDER_REVERSED:
        relevant.reverse()
    elif order_tag == ORDER_RANDOM:
        rng.shuffle(relevant)
    ordered = relevant
    for sentence in redundant:
        ordered.insert(rng.below(len(ordered) + 1), sentence)
    preamble = PREAMBLE if problem.task == LOGICAL else None
    return RenderedQuery(
        preamble=preamble,
        premises=tuple(ordered),
        question=question_sentence(problem.dag.node(problem.dag.root).name),
        order_tag=order_tag,
    )


def _chain_step(task: str, node: Node, names: dict[int, str], values: dict[int, int]) -> str:
    fmt = lambda v: format_chain_value(task, v)
    if node.is_leaf:
        return f"{node.name} is {node.value}.0" if task == ARITHMETIC else f"{node.name} is {node.value}."
    pn = [names[p] for p in node.parents]
    pv = [values[p] for p in node.parents]
    result = fmt(values[node.id])
    if node.op is Op.ADD:
        return f"{node.name} = {pn[0]} + {pn[1]} = {fmt(pv[0])} + {fmt(pv[1])} = {result}"
    if node.op is Op.SUB:
        return f"{node.name} = {pn[0]} - {pn[1]} = {fmt(pv[0])} - {fmt(pv[1])} = {result}"
    if node.op is Op.MUL:
        return f"{node.name} = {pn[0]} * {pn[1]} = {fmt(pv[0])} * {fmt(pv[1])} = {result}"
    if node.op is Op.SQUARE:
        return f"{node.name} = {pn[0]}^2 = ({fmt(pv[0])})^2 = {result}"
    if node.op is Op.AND:
        return f"{node.name} = ({pn[0]} AND {pn[1]}) = ({pv[0]} AND {pv[1]}) = {result}."
    if node.op is Op.OR:
        return f"{node.name} = ({pn[0]} OR {pn[1]}) = ({pv[0]} OR {pv[1]}) = {result}."
    if node.op is Op.NOT:
        return f"{node.name} = (NOT {pn[0]}) = (NOT {pv[0]}) = {result}."
    raise ValueError(node.op)


def render_chain_for_order(dag: Dag, task: str, order: list[int]) -> ReasoningChain:
    """Reasoning chain text for a given topological order of the relevant DAG."""
    names = {n.id: n.name for n in dag.nodes}
    values = evaluate(dag)
    steps = tuple(_chain_step(task, dag.node(nid), names, values) for nid in order)
    answer = values[dag.root]
    text = "\n".join(steps + (f"{ANSWER_MARKER} {format_answer(task, answer)}",))
    return ReasoningChain(steps=steps, final_answer=answer, text=text)


def render_reasoning_chain(problem: Problem) -> ReasoningChain:
    """Ground-truth chain over the relevant subgraph in canonical topological
    order; redundant nodes never appear."""
    return render_chain_for_order(problem.dag, problem.task, topological_order(problem.dag))


# ---------------------------------------------------------------------------
# parsing

_LEAF_RE = re.compile(r"^The value of ([a-z]+) is (-?\d+)\.$")
_BARE_LEAF_RE = re.compile(r"^([a-z]+) is (-?\d+)\.$")
_ARITH_DEP_RE = re.compile(
    r"^([a-z]+) gets its value by (?:"
    r"adding together the value of ([a-z]+) and ([a-z]+)"
    r"|subtracting the value of ([a-z]+) from the value of ([a-z]+)"
    r"|multiplying together the value of ([a-z]+) and ([a-z]+)"
    r"|squaring the value that ([a-z]+) has"
    r")\.$"
)
_LOGIC_DEP_RE = re.compile(r"^The value of ([a-z]+) equals to \(([a-z]+) (AND|OR) ([a-z]+)\)\.$")
_LOGIC_NOT_RE = re.compile(r"^The value of ([a-z]+) equals to \(NOT ([a-z]+)\)\.$")
_QUESTION_RE = re.compile(r"^What is the value of ([a-z]+)\?$")


@dataclass(frozen=True)
class ParsedNode:
    name: str
    op: Op | None
    parents: tuple[str, ...]
    value: int | None  # declared value for leaves, None for dependencies


@dataclass(frozen=True)
class ParsedSentence:
    line: int
    text: str
    kind: str  # "preamble" | "leaf-value" | "dependency" | "question"
    subject: str | None


@dataclass(frozen=True)
class SemanticForm:
    """The parsed semantic layer: named nodes, the root, and the task."""

    nodes: dict[str, ParsedNode]
    root: str
    task: str


@dataclass(frozen=True)
class ParsedQuery:
    sep: str
    sentences: tuple[ParsedSentence, ...]
    nodes: dict[str, ParsedNode]
    root: str
    task: str
    has_preamble: bool
    values: dict[str, int]
    relevant: frozenset[str]

    @property
    def root_value(self) -> int:
        return self.values[self.root]

    @property
    def premises(self) -> list[ParsedSentence]:
        return [s for s in self.sentences if s.kind in ("leaf-value", "dependency")]

    @property
    def labels(self) -> list[int]:
        return [1 if s.subject in self.relevant else 0 for s in self.premises]

    @property
    def semantics(self) -> SemanticForm:
        return SemanticForm(nodes=self.nodes, root=self.root, task=self.task)


def _classify(line: int, text: str) -> tuple[str, ParsedNode | None]:
    if text == PREAMBLE:
        return "preamble", None
    m = _QUESTION_RE.match(text)
    if m:
        return "question", ParsedNode(m.group(1), None, (), None)
    m = _LEAF_RE.match(text) or _BARE_LEAF_RE.match(text)
    if m:
        return "leaf-value", ParsedNode(m.group(1), None, (), int(m.group(2)))
    m = _ARITH_DEP_RE.match(text)
    if m:
        name = m.group(1)
        if m.group(2):
            return "dependency", ParsedNode(name, Op.ADD, (m.group(2), m.group(3)), None)
        if m.group(4):
            # "subtracting X from Y" means Y - X: minuend second in the sentence
            return "dependency", ParsedNode(name, Op.SUB, (m.group(5), m.group(4)), None)
        if m.group(6):
            return "dependency", ParsedNode(name, Op.MUL, (m.group(6), m.group(7)), None)
        return "dependency", ParsedNode(name, Op.SQUARE, (m.group(8),), None)
    m = _LOGIC_DEP_RE.match(text)
    if m:
        op = Op.AND if m.group(3) == "AND" else Op.OR
        return "dependency", ParsedNode(m.group(1), op, (m.group(2), m.group(4)), None)
    m = _LOGIC_NOT_RE.match(text)
    if m:
        return "dependency", ParsedNode(m.group(1), Op.NOT, (m.group(2),), None)
    raise MalformedSentenceError(line, text)


def _evaluate_parsed(nodes: dict[str, ParsedNode]) -> dict[str, int]:
    values: dict[str, int] = {}
    WHITE, GREY, BLACK = 0, 1, 2
    state = {name: WHITE for name in nodes}
    for start in nodes:
        if state[start] == BLACK:
            continue
        stack = [start]
        while stack:
            name = stack[-1]
            node = nodes[name]
            if state[name] == WHITE:
                state[name] = GREY
                for p in node.parents:
                    if state[p] == GREY:
                        raise CyclicDefinitionError(f"through node {p!r}")
                    if state[p] == WHITE:
                        stack.append(p)
            else:
                stack.pop()
                if state[name] == BLACK:
                    continue
                state[name] = BLACK
                if node.op is None:
                    values[name] = node.value
                else:
                    from .dag import apply_op

                    values[name] = apply_op(node.op, tuple(values[p] for p in node.parents))
    return values


def _closure(nodes: dict[str, ParsedNode], root: str) -> frozenset[str]:
    seen: set[str] = set()
    stack = [root]
    while stack:
        name = stack.pop()
        if name in seen:
            continue
        seen.add(name)
        stack.extend(nodes[name].parents)
    return frozenset(seen)


def parse_query(text: str, sep: str = DEFAULT_SEP) -> ParsedQuery:
    """Recover the semantic form of a template-conforming query.

    Total over the template grammar; every malformation is a distinct
    ParseError subclass.
    """
    sentences: list[ParsedSentence] = []
    nodes: dict[str, ParsedNode] = {}
    root: str | None = None
    has_preamble = False
    any_logic = False
    bare_leaf = False

    for i, raw in enumerate(text.split(sep)):
        line = i + 1
        stripped = raw.strip()
        if not stripped:
            continue
        kind, node = _classify(line, stripped)
        if kind == "preamble":
            has_preamble = True
            sentences.append(ParsedSentence(line, stripped, kind, None))
            continue
        if kind == "question":
            if root is not None:
                raise MalformedSentenceError(line, stripped + " (second question sentence)")
            root = node.name
            sentences.append(ParsedSentence(line, stripped, kind, node.name))
            continue
        if node.name in nodes:
            raise DuplicateDefinitionError(line, node.name)
        nodes[node.name] = node
        sentences.append(ParsedSentence(line, stripped, kind, node.name))
        if node.op is not None and node.op.logical:
            any_logic = True
        if kind == "leaf-value" and _BARE_LEAF_RE.match(stripped) and not _LEAF_RE.match(stripped):
            bare_leaf = True

    if root is None:
        raise MissingQuestionError()
    if root not in nodes:
        raise UndeclaredReferenceError(root)
    for node in nodes.values():
        for p in node.parents:
            if p not in nodes:
                raise UndeclaredReferenceError(p)

    task = LOGICAL if (has_preamble or any_logic or bare_leaf) else ARITHMETIC
    values = _evaluate_parsed(nodes)
    if task == LOGICAL:
        for node in nodes.values():
            if node.op is None and node.value not in (0, 1):
                raise ParseError(f"logical leaf {node.name!r} has non-bit value {node.value}")
    return ParsedQuery(
        sep=sep,
        sentences=tuple(sentences),
        nodes=nodes,
        root=root,
        task=task,
        has_preamble=has_preamble,
        values=values,
        relevant=_closure(nodes, root),
    )


def render_parsed_query(parsed: ParsedQuery) -> str:
    """Re-render a parsed query in its original sentence order from semantics
    alone; byte-identical to the input for renderer-produced queries."""
    parts: list[str] = []
    for s in parsed.sentences:
        if s.kind == "preamble":
            parts.append(PREAMBLE)
        elif s.kind == "question":
            parts.append(question_sentence(parsed.root))
        else:
            node = parsed.nodes[s.subject]
            if node.op is None:
                parts.append(leaf_sentence(node.name, node.value))
            else:
                parts.append(dependency_sentence(node.name, node.op, node.parents))
    return parsed.sep.join(parts)


def canonical_parse(problem: Problem) -> SemanticForm:
    """Semantic form built directly from a problem, bypassing text."""
    names = {n.id: n.name for n in problem.all_nodes()}
    nodes = {
        n.name: ParsedNode(
            n.name,
            n.op,
            tuple(names[p] for p in n.parents),
            n.value if n.is_leaf else None,
        )
        for n in problem.all_nodes()
    }
    return SemanticForm(nodes=nodes, root=names[problem.dag.root], task=problem.task)


def _closure_signature(form) -> tuple:
    nodes: dict[str, ParsedNode] = form.nodes
    closure = _closure(nodes, form.root)
    sig = {}
    for name in closure:
        node = nodes[name]
        if node.op is None:
            sig[name] = ("leaf", node.value)
        else:
            sig[name] = (node.op.value, node.parents)
    return (form.root, sig)


def semantic_equal(a, b) -> int:
    """1 iff the root ancestor-closures agree name-for-name in operators,
    parent order, and leaf values; redundant parts are ignored."""
    return int(_closure_signature(a) == _closure_signature(b))


def problem_from_parsed(parsed: ParsedQuery) -> Problem:
    """Rebuild a Problem's relevant DAG from a parsed query.

    Node ids follow declaration order within the query; redundant sentences
    are dropped (they never participate in reasoning chains).
    """
    order = [s.subject for s in parsed.premises if s.subject in parsed.relevant]
    ids = {name: i for i, name in enumerate(order)}
    nodes = []
    for name in order:
        pn = parsed.nodes[name]
        value = parsed.values[name]
        nodes.append(Node(ids[name], name, pn.op, tuple(ids[p] for p in pn.parents), value))
    dag = Dag(nodes=tuple(nodes), root=ids[parsed.root])
    return Problem(
        dag=dag,
        redundant_units=(),
        task=parsed.task,
        depth=dag_depth(dag),
        difficulty=difficulty(dag),
        seed=0,
    )
