"""Semantic layer: rooted expression DAGs over arithmetic or boolean operators.

A problem is a tree-shaped DAG (each non-leaf has one or two parents, i.e.
operands) whose root is the value being asked for, plus zero or more
disconnected redundant units that act as pure distraction when rendered.
All node values are exact Python integers, so deep square/multiply chains
never overflow.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .rng import SplitMix64

ARITHMETIC = "arithmetic"
LOGICAL = "logical"

ARITH_LEAF_MAX = 10  # leaf values sampled from 0..10 inclusive


class StructuralError(Exception):
    """Raised when a (possibly parsed, adversarial) graph is not a valid DAG."""


class Op(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SQUARE = "square"
    AND = "and"
    OR = "or"
    NOT = "not"

    @property
    def arity(self) -> int:
        return 1 if self in (Op.SQUARE, Op.NOT) else 2

    @property
    def logical(self) -> bool:
        return self in (Op.AND, Op.OR, Op.NOT)


ARITH_OPS = (Op.ADD, Op.SUB, Op.MUL, Op.SQUARE)
LOGIC_OPS = (Op.AND, Op.OR, Op.NOT)


def ops_for_task(task: str):
    if task == ARITHMETIC:
        return ARITH_OPS
    if task == LOGICAL:
        return LOGIC_OPS
    raise ValueError(f"unknown task: {task!r}")


def apply_op(op: Op, args: tuple[int, ...]) -> int:
    if len(args) != op.arity:
        raise StructuralError(f"{op.name} expects {op.arity} operands, got {len(args)}")
    if op is Op.ADD:
        return args[0] + args[1]
    if op is Op.SUB:
        # parents stored as [minuend, subtrahend]
        return args[0] - args[1]
    if op is Op.MUL:
        return args[0] * args[1]
    if op is Op.SQUARE:
        return args[0] * args[0]
    if op is Op.AND:
        return args[0] & args[1]
    if op is Op.OR:
        return args[0] | args[1]
    if op is Op.NOT:
        return 1 - args[0]
    raise ValueError(op)


def node_name(index: int) -> str:
    """Deterministic lowercase name sequence: aaa, aab, ..., aaz, aba, ...

    Grows to four letters after zzz; creation order is the only input.
    """
    width = 3
    while index >= 26**width:
        index -= 26**width
        width += 1
    letters = []
    for _ in range(width):
        letters.append(chr(ord("a") + index % 26))
        index //= 26
    return "".join(reversed(letters))


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    op: Op | None  # None for leaves
    parents: tuple[int, ...]  # operand node ids, empty for leaves
    value: int

    @property
    def is_leaf(self) -> bool:
        return self.op is None


@dataclass(frozen=True)
class Dag:
    """Relevant part of a problem: the root's full ancestor closure."""

    nodes: tuple[Node, ...]  # indexed by id
    root: int

    def node(self, nid: int) -> Node:
        return self.nodes[nid]

    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for p in n.parents:
                out[p].append(n.id)
        return out


@dataclass(frozen=True)
class RedundantUnit:
    """One disconnected dependency: an internal node plus its fresh leaves."""

    internal: Node
    fresh_leaves: tuple[Node, ...]

    def nodes(self) -> tuple[Node, ...]:
        return self.fresh_leaves + (self.internal,)


@dataclass(frozen=True)
class Problem:
    dag: Dag
    redundant_units: tuple[RedundantUnit, ...]
    task: str
    depth: int
    difficulty: int
    seed: int

    def all_nodes(self) -> list[Node]:
        out = list(self.dag.nodes)
        for unit in self.redundant_units:
            out.extend(unit.nodes())
        return out

    def next_node_index(self) -> int:
        return len(self.all_nodes())


def generate_dag(task: str, depth: int, rng: SplitMix64) -> Dag:
    """Generate a DAG root-first.

    The root is created first; each non-leaf samples an operator and recurses
    into one or two parent subtrees until the requested depth of non-leaf
    levels is reached, at which point parents are leaves. Leaf values are then
    sampled in creation order and every internal value computed bottom-up.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    ops = ops_for_task(task)
    structure: list[tuple[Op | None, tuple[int, ...]]] = []

    def build(levels_left: int) -> int:
        nid = len(structure)
        structure.append((None, ()))  # reserve slot so ids follow creation order
        if levels_left == 0:
            return nid
        op = ops[rng.below(len(ops))]
        parents = tuple(build(levels_left - 1) for _ in range(op.arity))
        structure[nid] = (op, parents)
        return nid

    root = build(depth)

    leaf_max = ARITH_LEAF_MAX if task == ARITHMETIC else 1
    values: dict[int, int] = {}
    for nid, (op, _) in enumerate(structure):
        if op is None:
            values[nid] = rng.below(leaf_max + 1)

    def value_of(nid: int) -> int:
        if nid in values:
            return values[nid]
        op, parents = structure[nid]
        values[nid] = apply_op(op, tuple(value_of(p) for p in parents))
        return values[nid]

    nodes = tuple(
        Node(nid, node_name(nid), op, parents, value_of(nid))
        for nid, (op, parents) in enumerate(structure)
    )
    return Dag(nodes=nodes, root=root)


def evaluate(dag: Dag) -> dict[int, int]:
    """Recompute every node's value from leaf values; detects cycles.

    Works on adversarial (parsed) structures, so traversal is iterative with
    explicit visit states rather than trusting stored values.
    """
    WHITE, GREY, BLACK = 0, 1, 2
    state = {n.id: WHITE for n in dag.nodes}
    values: dict[int, int] = {}
    by_id = {n.id: n for n in dag.nodes}

    for start in by_id:
        if state[start] == BLACK:
            continue
        stack = [start]
        while stack:
            nid = stack[-1]
            node = by_id[nid]
            if state[nid] == WHITE:
                state[nid] = GREY
                for p in node.parents:
                    if p not in by_id:
                        raise StructuralError(f"node {node.name} references unknown id {p}")
                    if state[p] == GREY:
                        raise StructuralError(f"cycle through node {by_id[p].name}")
                    if state[p] == WHITE:
                        stack.append(p)
            else:
                stack.pop()
                if state[nid] == BLACK:
                    continue
                state[nid] = BLACK
                if node.is_leaf:
                    values[nid] = node.value
                else:
                    values[nid] = apply_op(node.op, tuple(values[p] for p in node.parents))
    return values


def topological_order(dag: Dag) -> list[int]:
    """Canonical topological order: Kahn's method, lowest id first among ready nodes."""
    return _kahn(dag, pick=lambda ready: min(range(len(ready)), key=ready.__getitem__))


def sample_topological_order(dag: Dag, rng: SplitMix64) -> list[int]:
    """Uniform-at-each-step linear extension of the DAG's partial order."""
    return _kahn(dag, pick=lambda ready: rng.below(len(ready)))


def _kahn(dag: Dag, pick) -> list[int]:
    remaining = {n.id: len(n.parents) for n in dag.nodes}
    children = dag.children()
    ready = sorted(nid for nid, deg in remaining.items() if deg == 0)
    order: list[int] = []
    while ready:
        nid = ready.pop(pick(ready))
        order.append(nid)
        for child in children[nid]:
            remaining[child] -= 1
            if remaining[child] == 0:
                ready.append(child)
        ready.sort()
    if len(order) != len(dag.nodes):
        raise StructuralError("cycle detected: no valid topological order")
    return order


def dag_depth(dag: Dag) -> int:
    """Number of non-leaf levels on the longest root-to-leaf path."""

    def down(nid: int) -> int:
        node = dag.node(nid)
        if node.is_leaf:
            return 0
        return 1 + max(down(p) for p in node.parents)

    return down(dag.root)


def difficulty(dag: Dag) -> int:
    """Number of reasoning steps: one per non-leaf relevant node."""
    return sum(1 for n in dag.nodes if not n.is_leaf)


def make_redundant_unit(task: str, start_index: int, rng: SplitMix64) -> RedundantUnit:
    """Sample one disconnected unit: fresh leaves feeding one fresh internal node.

    Leaves are created before the internal node so names and ids continue the
    problem's creation-order sequence.
    """
    ops = ops_for_task(task)
    op = ops[rng.below(len(ops))]
    leaf_max = ARITH_LEAF_MAX if task == ARITHMETIC else 1
    leaves = []
    for i in range(op.arity):
        nid = start_index + i
        leaves.append(Node(nid, node_name(nid), None, (), rng.below(leaf_max + 1)))
    internal_id = start_index + op.arity
    value = apply_op(op, tuple(leaf.value for leaf in leaves))
    internal = Node(internal_id, node_name(internal_id), op, tuple(l.id for l in leaves), value)
    return RedundantUnit(internal=internal, fresh_leaves=tuple(leaves))


def attach_redundancy(problem: Problem, count: int, rng: SplitMix64) -> Problem:
    """Append `count` redundant units; the relevant DAG and root value are untouched."""
    if count < 0:
        raise ValueError(f"redundancy count must be >= 0, got {count}")
    if count == 0:
        return problem
    units = list(problem.redundant_units)
    next_index = problem.next_node_index()
    for _ in range(count):
        unit = make_redundant_unit(problem.task, next_index, rng)
        units.append(unit)
        next_index += len(unit.nodes())
    return replace(problem, redundant_units=tuple(units))


def generate_problem(task: str, depth: int, redundancy: int, seed: int) -> Problem:
    """Build a full problem from one seed; bit-exactly reproducible.

    Redundancy draws continue the same stream after DAG generation, so the
    relevant DAG is identical across redundancy counts for a fixed seed.
    """
    rng = SplitMix64(seed)
    dag = generate_dag(task, depth, rng)
    problem = Problem(
        dag=dag,
        redundant_units=(),
        task=task,
        depth=dag_depth(dag),
        difficulty=difficulty(dag),
        seed=seed,
    )
    return attach_redundancy(problem, redundancy, rng)
