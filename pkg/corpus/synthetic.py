import logging
from typing import Dict, List

import numpy as np

from corpus.dataset import Corpus, CorpusError, LanguageTag, Split
from corpus.labels import ACTIVE_LABELS, Label
from corpus.rounding import largest_remainder

"""
Synthetic stand-in for the non-distributable shared-task data.
Each class writes its comments from its own token pool, so any injective
bag-of-tokens encoding separates the classes.
"""

logger = logging.getLogger(__name__)

FRACTION_TOLERANCE = 1e-6
MIN_TOKENS_PER_TEXT = 3
MAX_TOKENS_PER_TEXT = 8


class BadFractions(CorpusError):
    def __init__(self, message: str):
        super().__init__(f"Bad class fractions: {message}")


class TooSmall(CorpusError):
    def __init__(self, n: int, classes: int):
        self.n = n
        self.classes = classes
        super().__init__(f"n={n} cannot host {classes} nonzero classes")


def class_token_pool(label: Label, pool_size: int) -> List[str]:
    """Tokens reserved for one class; alphanumeric so cleaning leaves them intact"""
    return [f"tok{label.order}x{j}" for j in range(pool_size)]


def _validate_fractions(fractions: Dict[Label, float]) -> Dict[Label, float]:
    if not fractions:
        raise BadFractions("no classes given")
    for label, value in fractions.items():
        if label not in ACTIVE_LABELS:
            raise BadFractions(f"{label} is not an active label")
        if value < 0:
            raise BadFractions(f"negative fraction for {label}")
    total = sum(fractions.values())
    if abs(total - 1.0) > FRACTION_TOLERANCE:
        raise BadFractions(f"fractions sum to {total:.8f}, expected 1")
    return {label: value for label, value in fractions.items() if value > 0}


def synthesize_corpus(n: int, fractions: Dict[Label, float], vocab_size: int, seed: int,
                      split: Split = Split.TRAIN) -> Corpus:
    """
    Generate a labeled corpus whose class counts are the largest-remainder
    rounding of n * fractions.

    vocab_size distinct tokens are divided evenly between the nonzero classes
    (at least one token each). Texts are 3-8 tokens drawn with replacement from
    their class pool. Output is a deterministic function of the arguments.
    """
    if n <= 0 or vocab_size <= 0:
        raise BadFractions("n and vocab_size must be positive")
    nonzero = _validate_fractions(fractions)
    if n < len(nonzero):
        raise TooSmall(n, len(nonzero))

    counts = largest_remainder(n, nonzero)
    pool_size = max(1, vocab_size // len(nonzero))
    pools = {label: class_token_pool(label, pool_size) for label in nonzero}

    rng = np.random.default_rng(seed)
    labels = [label for label in sorted(counts, key=lambda item: item.order) for _ in range(counts[label])]
    order = rng.permutation(len(labels))

    pairs = []
    for index in order:
        label = labels[index]
        length = int(rng.integers(MIN_TOKENS_PER_TEXT, MAX_TOKENS_PER_TEXT + 1))
        picks = rng.integers(0, pool_size, size=length)
        pairs.append((" ".join(pools[label][p] for p in picks), label))

    logger.debug(f"Synthesized {n} examples over {len(nonzero)} classes (pool size {pool_size})")
    return Corpus.from_pairs(pairs, split=split, language_tag=LanguageTag.SYNTHETIC)
