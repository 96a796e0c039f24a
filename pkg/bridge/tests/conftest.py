"""Session fixtures for the bridge tests."""

import pytest

from bridge_helpers import build_tiny_model, build_word_tokenizer
from dagreason.dataset import EvalSuiteConfig, build_eval_suite


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    """Tiny model + tokenizer saved to disk, loadable by identifier/path."""
    base = tmp_path_factory.mktemp("model")
    config = EvalSuiteConfig(
        task="arithmetic",
        depths=(3,),
        orders=("topological", "random", "reversed"),
        redundancy_levels=(0, 4),
        count=20,
        master_seed=5,
    )
    texts = [item.query for item in build_eval_suite(config)]
    texts += [
        item.query
        for item in build_eval_suite(
            EvalSuiteConfig(
                task="logical",
                depths=(3,),
                orders=("topological", "random"),
                redundancy_levels=(0, 4),
                count=20,
                master_seed=5,
            )
        )
    ]
    tokenizer = build_word_tokenizer(texts)
    model = build_tiny_model(tokenizer.vocab_size)
    tokenizer.save_pretrained(str(base))
    model.save_pretrained(str(base))
    return str(base)
