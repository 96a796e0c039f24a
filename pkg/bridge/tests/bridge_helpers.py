"""Tiny local causal LM, word-level tokenizer, and dataset builders for tests."""

import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

from dagreason.dataset import EvalSuiteConfig, build_eval_suite, write_suite


def build_word_tokenizer(texts: list[str]) -> PreTrainedTokenizerFast:
    """Word-level tokenizer whose vocabulary covers every word in `texts`."""
    pre = pre_tokenizers.Whitespace()
    vocab = {"[UNK]": 0}
    for text in texts:
        for word, _ in pre.pre_tokenize_str(text):
            if word not in vocab:
                vocab[word] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre
    return PreTrainedTokenizerFast(tokenizer_object=tok, unk_token="[UNK]")


def build_tiny_model(vocab_size: int) -> GPT2LMHeadModel:
    torch.manual_seed(1234)
    config = GPT2Config(
        vocab_size=vocab_size,
        n_positions=1024,
        n_embd=32,
        n_layer=2,
        n_head=2,
        attn_implementation="eager",
    )
    model = GPT2LMHeadModel(config)
    model.eval()
    return model


def make_suite(tmp_path, task="arithmetic", depth=2, redundancy=1, count=10, seed=77):
    config = EvalSuiteConfig(
        task=task,
        depths=(depth,),
        orders=("topological",),
        redundancy_levels=(redundancy,),
        count=count,
        master_seed=seed,
    )
    items = build_eval_suite(config)
    path = str(tmp_path / f"{task}-suite.jsonl")
    write_suite(path, items, config)
    return path, items
