"""dagreason: DAG-based reasoning benchmarks, symmetry-enhanced augmentation,
evaluation harness, and attention probing."""

__version__ = "0.1.0"

from .dag import (
    ARITHMETIC,
    LOGICAL,
    Dag,
    Node,
    Op,
    Problem,
    RedundantUnit,
    StructuralError,
    attach_redundancy,
    difficulty,
    evaluate,
    generate_dag,
    generate_problem,
    sample_topological_order,
    topological_order,
)
from .render import (
    ParseError,
    ParsedQuery,
    ReasoningChain,
    RenderedQuery,
    canonical_parse,
    parse_query,
    render_premises,
    render_query,
    render_reasoning_chain,
    semantic_equal,
)
from .augment import (
    AugmentConfig,
    QaPair,
    mend_augment,
    mend_rc_augment,
    permute_paraphrases,
    rc_augment,
)
from .rng import SplitMix64, derive_seed, mix64, problem_seed

__all__ = [name for name in dir() if not name.startswith("_")]
