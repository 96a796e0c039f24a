import pytest

from dagreason.dag import ARITHMETIC, LOGICAL, generate_problem
from dagreason.render import (
    CyclicDefinitionError,
    DuplicateDefinitionError,
    MalformedSentenceError,
    MissingQuestionError,
    PREAMBLE,
    UndeclaredReferenceError,
    canonical_parse,
    parse_query,
    problem_from_parsed,
    render_parsed_query,
    render_premises,
    render_query,
    render_reasoning_chain,
    semantic_equal,
)
from dagreason.rng import SplitMix64

from oracles import GOLDEN_ARITH_QUERY, GOLDEN_LOGIC_QUERY


# ---------------------------------------------------------------------------
# premise rendering

def test_golden_template_strings_roundtrip_through_parser():
    parsed = parse_query(GOLDEN_ARITH_QUERY)
    aai = parsed.nodes["aai"]
    assert aai.parents == ("aag", "aah")  # minuend first
    assert parsed.values["aai"] == 6


def test_premise_templates_exact():
    problem = generate_problem(ARITHMETIC, 2, 0, 42)
    premises = {p.subject: p.text for p in render_premises(problem)}
    # frozen listing for this seed: aaa=SUB(aab,aad), aab=SQUARE(aac),
    # aac=1, aad=MUL(aae,aaf), aae=2, aaf=9
    assert premises["aac"] == "The value of aac is 1."
    assert premises["aab"] == "aab gets its value by squaring the value that aac has."
    assert premises["aad"] == "aad gets its value by multiplying together the value of aae and aaf."
    assert premises["aaa"] == "aaa gets its value by subtracting the value of aad from the value of aab."


def test_relevance_bits_and_counts():
    problem = generate_problem(LOGICAL, 3, 4, 5)
    premises = render_premises(problem)
    relevant = [p for p in premises if p.relevant]
    redundant = [p for p in premises if not p.relevant]
    assert len(relevant) == len(problem.dag.nodes)
    assert len([p for p in redundant if p.kind == "dependency"]) == 4


def test_query_structure_depth1_topological():
    problem = generate_problem(ARITHMETIC, 1, 0, 3)
    query = render_query(problem, "topological", SplitMix64(0))
    kinds = [p.kind for p in query.premises]
    assert kinds[:-1] == ["leaf-value"] * (len(kinds) - 1)
    assert kinds[-1] == "dependency"
    assert query.question.startswith("What is the value of ")
    assert query.preamble is None


def test_logical_query_has_pinned_preamble():
    problem = generate_problem(LOGICAL, 2, 0, 9)
    query = render_query(problem, "random", SplitMix64(1))
    assert query.preamble == PREAMBLE
    assert query.text.split("\n")[0] == PREAMBLE
    assert query.text.split("\n")[-1] == query.question


def test_reversed_is_reverse_of_topological():
    problem = generate_problem(ARITHMETIC, 2, 0, 8)
    topo = render_query(problem, "topological", SplitMix64(0))
    rev = render_query(problem, "reversed", SplitMix64(0))
    assert [p.text for p in rev.premises] == [p.text for p in topo.premises][::-1]


def test_query_text_joins_byte_exactly():
    problem = generate_problem(LOGICAL, 3, 2, 4)
    query = render_query(problem, "random", SplitMix64(2))
    expected = "\n".join([query.preamble] + [p.text for p in query.premises] + [query.question])
    assert query.text == expected


# ---------------------------------------------------------------------------
# reasoning chains

def test_chain_formats_arithmetic():
    problem = generate_problem(ARITHMETIC, 2, 0, 42)
    chain = render_reasoning_chain(problem)
    assert "aac is 1.0" in chain.steps
    assert "aab = aac^2 = (1.0)^2 = 1.0" in chain.steps
    assert "aad = aae * aaf = 2.0 * 9.0 = 18.0" in chain.steps
    assert "aaa = aab - aad = 1.0 - 18.0 = -17.0" in chain.steps
    assert chain.text.endswith("Thus, the answer is -17.0")
    assert chain.final_answer == -17


def test_chain_excludes_redundant_nodes():
    problem = generate_problem(ARITHMETIC, 2, 6, 17)
    chain = render_reasoning_chain(problem)
    for unit in problem.redundant_units:
        for node in unit.nodes():
            assert node.name not in chain.text


def test_chain_step_order_is_topologically_valid():
    problem = generate_problem(LOGICAL, 3, 0, 21)
    chain = render_reasoning_chain(problem)
    seen = set()
    names = {n.id: n.name for n in problem.dag.nodes}
    for step in chain.steps:
        subject = step.split(" ")[0]
        node = next(n for n in problem.dag.nodes if n.name == subject)
        for p in node.parents:
            assert names[p] in seen
        seen.add(subject)


def test_logical_chain_final_line_has_no_period():
    problem = generate_problem(LOGICAL, 2, 0, 6)
    chain = render_reasoning_chain(problem)
    last = chain.text.split("\n")[-1]
    assert last in ("Thus, the answer is 0", "Thus, the answer is 1")


# ---------------------------------------------------------------------------
# parsing

def test_parse_recovers_golden_arithmetic_structure():
    parsed = parse_query(GOLDEN_ARITH_QUERY)
    assert parsed.root == "aap"
    assert parsed.task == ARITHMETIC
    assert len(parsed.relevant) == 14  # 7 leaves + 7 internal
    redundant = set(parsed.nodes) - set(parsed.relevant)
    assert redundant == {"aat", "aau", "aav"}


def test_parse_accepts_bare_leaf_form():
    parsed = parse_query(GOLDEN_LOGIC_QUERY)
    assert parsed.task == LOGICAL
    assert parsed.nodes["aak"].value == 1
    assert parsed.root_value == 1


@pytest.mark.parametrize("text,error", [
    ("The value of x is\nWhat is the value of x?", MalformedSentenceError),
    ("The value of aaa is 1.\nThe value of aab is 2.", MissingQuestionError),
    ("The value of aaa is 1.\nThe value of aaa is 2.\nWhat is the value of aaa?",
     DuplicateDefinitionError),
    ("aab gets its value by squaring the value that aaa has.\nWhat is the value of aab?",
     UndeclaredReferenceError),
    ("The value of aaa is 1.\nWhat is the value of zzz?", UndeclaredReferenceError),
    ("aaa gets its value by squaring the value that aab has.\n"
     "aab gets its value by squaring the value that aaa has.\n"
     "What is the value of aaa?", CyclicDefinitionError),
])
def test_parse_error_kinds(text, error):
    with pytest.raises(error):
        parse_query(text)


def test_parse_rejects_second_question():
    text = "The value of aaa is 1.\nWhat is the value of aaa?\nWhat is the value of aaa?"
    with pytest.raises(MalformedSentenceError):
        parse_query(text)


def test_labels_match_relevance():
    problem = generate_problem(ARITHMETIC, 3, 5, 77)
    query = render_query(problem, "random", SplitMix64(4))
    parsed = parse_query(query.text)
    assert parsed.labels == list(query.labels)
    # the count of 0-labeled dependency sentences equals the redundancy count
    zero_deps = [
        s for s in parsed.premises
        if s.kind == "dependency" and s.subject not in parsed.relevant
    ]
    assert len(zero_deps) == 5


# ---------------------------------------------------------------------------
# semantic equality and round trips

def test_semantic_equal_reflexive_and_order_invariant():
    problem = generate_problem(LOGICAL, 3, 3, 30)
    topo = parse_query(render_query(problem, "topological", SplitMix64(0)).text)
    rev = parse_query(render_query(problem, "reversed", SplitMix64(0)).text)
    assert semantic_equal(topo, topo) == 1
    assert semantic_equal(topo, rev) == 1
    assert semantic_equal(topo, canonical_parse(problem)) == 1


def test_semantic_equal_detects_value_change():
    a = parse_query("The value of aaa is 8.\nWhat is the value of aaa?")
    b = parse_query("The value of aaa is 7.\nWhat is the value of aaa?")
    assert semantic_equal(a, b) == 0


def test_semantic_equal_ignores_redundant_parts():
    base = "The value of aaa is 3.\nWhat is the value of aaa?"
    extra = "The value of aaa is 3.\nThe value of aab is 9.\nWhat is the value of aaa?"
    assert semantic_equal(parse_query(base), parse_query(extra)) == 1


@pytest.mark.parametrize("task", [ARITHMETIC, LOGICAL])
@pytest.mark.parametrize("order", ["topological", "random", "reversed"])
def test_roundtrip_small_sweep(task, order):
    for seed in range(10):
        problem = generate_problem(task, 3, 3, seed)
        query = render_query(problem, order, SplitMix64(seed + 1))
        parsed = parse_query(query.text)
        assert semantic_equal(parsed, canonical_parse(problem)) == 1
        assert parsed.root_value == problem.dag.node(problem.dag.root).value


def test_rerender_is_byte_exact():
    for seed in range(10):
        problem = generate_problem(ARITHMETIC, 3, 4, seed)
        query = render_query(problem, "random", SplitMix64(seed))
        parsed = parse_query(query.text)
        assert render_parsed_query(parsed) == query.text


def test_problem_from_parsed_supports_chain_rendering():
    problem = generate_problem(ARITHMETIC, 3, 2, 55)
    query = render_query(problem, "topological", SplitMix64(0))
    rebuilt = problem_from_parsed(parse_query(query.text))
    chain = render_reasoning_chain(rebuilt)
    assert chain.final_answer == problem.dag.node(problem.dag.root).value
