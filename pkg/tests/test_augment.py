import pytest

from dagreason.augment import (
    AugmentConfig,
    MODE_MEND,
    MODE_MEND_RC,
    MODE_RC,
    QaPair,
    augment_pair,
    mend_augment,
    mend_rc_augment,
    mend_transform,
    permute_paraphrases,
    qa_from_problem,
    rc_augment,
    rc_augment_qa,
)
from dagreason.dag import ARITHMETIC, LOGICAL, generate_problem
from dagreason.render import PREAMBLE, parse_query, semantic_equal
from dagreason.rng import SplitMix64

from oracles import enumerate_linear_extensions


TWO_PREMISE_QUERY = "\n".join([
    "The value of aaa is 1.",
    "The value of aab is 2.",
    "What is the value of aaa?",
])


def sample_pair(task=ARITHMETIC, depth=3, redundancy=0, seed=7) -> QaPair:
    problem = generate_problem(task, depth, redundancy, seed)
    return qa_from_problem(problem, f"{task}-{seed}", SplitMix64(seed))


# ---------------------------------------------------------------------------
# MEND transform

def test_mend_double_shuffle_frozen_permutations():
    # frozen from an independent splitmix64 replay: with two partitions the
    # composed shuffles swap under seed 0 and cancel out under seed 5
    swapped = mend_transform(TWO_PREMISE_QUERY, 0, SplitMix64(0))
    assert swapped.split("\n")[:2] == ["The value of aab is 2.", "The value of aaa is 1."]
    identity = mend_transform(TWO_PREMISE_QUERY, 0, SplitMix64(5))
    assert identity == TWO_PREMISE_QUERY


def test_mend_preserves_semantics_and_pins():
    for seed in range(10):
        qa = sample_pair(LOGICAL, 3, 2, seed)
        out = mend_transform(qa.query, 3, SplitMix64(seed + 100))
        lines = out.split("\n")
        assert lines[0] == PREAMBLE
        assert lines[-1] == qa.query.split("\n")[-1]
        assert semantic_equal(parse_query(qa.query), parse_query(out)) == 1


def test_mend_redundancy_delta_is_exactly_r():
    for r in (0, 1, 2, 5):
        qa = sample_pair(ARITHMETIC, 3, 1, 11)
        before = parse_query(qa.query)
        after = parse_query(mend_transform(qa.query, r, SplitMix64(3)))
        def zero_deps(p):
            return sum(
                1 for s in p.premises
                if s.kind == "dependency" and s.subject not in p.relevant
            )
        assert zero_deps(after) - zero_deps(before) == r


def test_mend_fresh_names_avoid_collisions():
    qa = sample_pair(ARITHMETIC, 3, 4, 2)
    out = parse_query(mend_transform(qa.query, 6, SplitMix64(9)))
    names = [s.subject for s in out.premises]
    assert len(names) == len(set(names))


def test_mend_augment_size_law_and_response_reuse():
    qa = sample_pair(ARITHMETIC, 3, 0, 4)
    for K in (0, 1, 4):
        pairs = mend_augment(qa, AugmentConfig(K=K, R=2, mode=MODE_MEND), SplitMix64(1))
        assert len(pairs) == K + 1
        assert pairs[0] is qa
        assert all(p.response == qa.response for p in pairs)
        assert all(p.augmentation == MODE_MEND for p in pairs[1:])


def test_mend_augment_rejects_wrong_mode():
    qa = sample_pair()
    with pytest.raises(ValueError):
        mend_augment(qa, AugmentConfig(mode=MODE_RC), SplitMix64(0))


def test_augment_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(K=-1)
    with pytest.raises(ValueError):
        AugmentConfig(R=-1)
    with pytest.raises(ValueError):
        AugmentConfig(sep="")
    with pytest.raises(ValueError):
        AugmentConfig(mode="bogus")


# ---------------------------------------------------------------------------
# RC-Aug

def test_rc_augment_queries_identical_chains_distinct():
    problem = generate_problem(ARITHMETIC, 3, 0, 20)
    pairs = rc_augment(problem, 4, SplitMix64(5), "p20")
    assert len(pairs) <= 5
    assert len({p.query for p in pairs}) == 1
    assert len({p.response for p in pairs}) == len(pairs)
    for p in pairs:
        answer = p.response.split("\n")[-1].removeprefix("Thus, the answer is ")
        assert float(answer) == problem.dag.node(problem.dag.root).value


def test_rc_augment_capped_by_linear_extension_count():
    # depth-1 DAGs have at most two linear extensions, so K=5 cannot be met
    for seed in range(20):
        problem = generate_problem(ARITHMETIC, 1, 0, seed)
        n_ext = len(enumerate_linear_extensions(problem.dag))
        pairs = rc_augment(problem, 5, SplitMix64(seed), "x")
        assert len(pairs) == min(6, n_ext)


def test_rc_augment_reaches_k_plus_one_when_extensions_allow():
    reached = 0
    for seed in range(20):
        problem = generate_problem(ARITHMETIC, 3, 0, seed)
        if len(enumerate_linear_extensions(problem.dag, limit=4)) >= 4:
            pairs = rc_augment(problem, 3, SplitMix64(seed), "x")
            assert len(pairs) == 4
            reached += 1
    assert reached > 0


def test_rc_augment_qa_matches_problem_route():
    problem = generate_problem(LOGICAL, 3, 0, 8)
    qa = qa_from_problem(problem, "p8", SplitMix64(8))
    pairs = rc_augment_qa(qa, 3, SplitMix64(42))
    assert pairs[0] is qa
    for p in pairs[1:]:
        assert p.query == qa.query
        assert p.response.split("\n")[-1] == qa.response.split("\n")[-1]


# ---------------------------------------------------------------------------
# MEND-RC

def test_mend_rc_size_law_and_query_variation():
    qa = sample_pair(ARITHMETIC, 3, 1, 33)
    pairs = mend_rc_augment(qa, AugmentConfig(K=4, R=2, mode=MODE_MEND_RC), SplitMix64(7))
    assert len(pairs) == 5
    assert pairs[0] is qa
    for p in pairs[1:]:
        assert p.query != qa.query
        assert semantic_equal(parse_query(p.query), parse_query(qa.query)) == 1
        assert p.response.split("\n")[-1] == qa.response.split("\n")[-1]


# ---------------------------------------------------------------------------
# paraphrases

def test_permute_paraphrases_pins_and_permutes():
    qa = sample_pair(LOGICAL, 3, 2, 12)
    outs = permute_paraphrases(qa.query, 8, SplitMix64(3))
    assert len(outs) == 8
    base_lines = qa.query.split("\n")
    for out in outs:
        lines = out.split("\n")
        assert lines[0] == PREAMBLE
        assert lines[-1] == base_lines[-1]
        assert sorted(lines) == sorted(base_lines)


def test_permute_paraphrases_validates_inputs():
    with pytest.raises(ValueError):
        permute_paraphrases(TWO_PREMISE_QUERY, 0, SplitMix64(0))
    with pytest.raises(Exception):
        permute_paraphrases("not a query", 2, SplitMix64(0))


# ---------------------------------------------------------------------------
# dispatcher + determinism

@pytest.mark.parametrize("mode", [MODE_MEND, MODE_RC, MODE_MEND_RC])
def test_augment_pair_deterministic(mode):
    qa = sample_pair(ARITHMETIC, 3, 0, 50)
    config = AugmentConfig(K=3, R=1, mode=mode)
    a = augment_pair(qa, config, SplitMix64(17))
    b = augment_pair(qa, config, SplitMix64(17))
    assert a == b
    c = augment_pair(qa, config, SplitMix64(18))
    if mode != MODE_RC:
        assert a != c  # different stream produces different shuffles


def test_augmented_pairs_keep_source_id():
    qa = sample_pair(ARITHMETIC, 2, 0, 61)
    for mode in (MODE_MEND, MODE_RC, MODE_MEND_RC):
        pairs = augment_pair(qa, AugmentConfig(K=2, R=1, mode=mode), SplitMix64(0))
        assert all(p.source_id == qa.source_id for p in pairs)
