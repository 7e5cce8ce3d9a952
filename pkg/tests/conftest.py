from pathlib import Path
from typing import Dict, List, Optional

import pytest

from corpus.dataset import Split, write_tsv
from corpus.labels import ACTIVE_LABELS, Label
from corpus.synthetic import synthesize_corpus
from encoder.backends import HashingBackend

"""
Shared fixtures: synthetic splits on disk, run-config files and a tiny
random-weight BERT checkpoint whose word-level vocabulary covers the
synthetic token pools.
"""

SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
TOKENS_PER_CLASS = 8
FOUR_LABELS = [Label.HOPE_SPEECH, Label.MISANDRY, Label.MISOGYNY, Label.NONE_OF_THE_ABOVE]


def uniform_fractions(labels: List[Label]) -> Dict[Label, float]:
    return {label: 1.0 / len(labels) for label in labels}


@pytest.fixture
def hashing_backend() -> HashingBackend:
    return HashingBackend(dim=64, seed=0)


@pytest.fixture(scope="session")
def tiny_bert_dir(tmp_path_factory) -> Path:
    """A 1-layer, 32-wide BERT classifier saved with its tokenizer"""
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizer
    import torch

    directory = tmp_path_factory.mktemp("tiny_bert")
    words = [f"tok{order}x{j}" for order in range(len(list(Label))) for j in range(TOKENS_PER_CLASS)]
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(SPECIAL_TOKENS + words) + "\n", encoding="utf-8")

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(SPECIAL_TOKENS) + len(words),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        hidden_dropout_prob=0.0,
        attention_probs_dropout_prob=0.0,
        max_position_embeddings=128,
        num_labels=2,
    )
    BertForSequenceClassification(config).save_pretrained(directory)
    BertTokenizer(str(vocab_file), do_lower_case=True).save_pretrained(directory)
    return directory


@pytest.fixture
def synthetic_splits(tmp_path):
    """Write train/dev/test TSVs drawn from per-class token pools; returns their paths"""

    def make(labels: Optional[List[Label]] = None, sizes=(80, 40, 40), vocab_size: int = 32,
             seed: int = 0) -> Dict[str, Path]:
        fractions = uniform_fractions(labels or FOUR_LABELS)
        paths = {}
        for offset, (split, n) in enumerate(zip((Split.TRAIN, Split.DEV, Split.TEST), sizes)):
            corpus = synthesize_corpus(n, fractions, vocab_size=vocab_size, seed=seed + offset, split=split)
            paths[split.value] = write_tsv(corpus, tmp_path / "data" / f"{split.value}.tsv")
        return paths

    return make


@pytest.fixture
def run_config_file(tmp_path):
    """Write a TOML run file over the given splits and model section"""

    def make(splits: Dict[str, Path], model: str, extra: str = "", tag: str = "synthetic",
             seed: int = 0, name: str = "run.toml") -> Path:
        dataset = "\n".join(f'{split} = "{path}"' for split, path in splits.items())
        text = (
            f"seed = {seed}\n"
            f'output_dir = "{tmp_path / "runs"}"\n\n'
            f"[dataset]\n"
            f'tag = "{tag}"\n'
            f"{dataset}\n\n"
            f"{extra}\n\n"
            f"{model}\n"
        )
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return make


@pytest.fixture
def active_labels() -> List[Label]:
    return list(ACTIVE_LABELS)
