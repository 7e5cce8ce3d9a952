import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from config.settings import DEFAULT_SMOTE_K
from corpus.dataset import Corpus, EmptyCorpus, Example
from corpus.labels import ACTIVE_LABELS, Label, sort_labels
from corpus.rounding import largest_remainder
from utils.errors import PipelineError

"""
Row-level class rebalancing: random over-sampling, length-preserving
over-under sampling and inverse-frequency class weights.
SMOTE lives in rebalance.smote because it works on embeddings, not rows.
"""

logger = logging.getLogger(__name__)

TARGET_TOLERANCE = 1e-6


class RebalanceError(PipelineError):
    """Base class for rebalancing errors"""


class BadRebalancePlan(RebalanceError):
    pass


class MissingTargetClass(RebalanceError):
    def __init__(self, label: Label):
        self.label = label
        super().__init__(f"Target class {label} has no examples to sample from")


class Strategy(str, Enum):
    NONE = "none"
    OVERSAMPLE = "oversample"
    OVER_UNDER = "over_under"
    SMOTE = "smote"
    CLASS_WEIGHTS = "class_weights"


@dataclass(frozen=True)
class RebalancePlan:
    strategy: Strategy = Strategy.NONE
    target: Optional[Dict[Label, float]] = None
    seed: int = 0
    smote_k: int = DEFAULT_SMOTE_K

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.smote_k < 1:
            raise BadRebalancePlan(f"smote_k must be >= 1, got {self.smote_k}")
        if self.target is not None:
            total = sum(self.target.values())
            if abs(total - 1.0) > TARGET_TOLERANCE:
                raise BadRebalancePlan(f"target fractions sum to {total:.8f}, expected 1")
            if any(value < 0 for value in self.target.values()):
                raise BadRebalancePlan("target fractions must be non-negative")

    def target_fractions(self) -> Dict[Label, float]:
        """Explicit target, or uniform over the active labels"""
        if self.target is not None:
            return dict(self.target)
        return {label: 1.0 / len(ACTIVE_LABELS) for label in ACTIVE_LABELS}


@dataclass(frozen=True)
class ClassWeights:
    weights: Dict[Label, float] = field(default_factory=dict)

    def __getitem__(self, label: Label) -> float:
        return self.weights[label]

    def for_labels(self, labels: List[Label]) -> List[float]:
        """Weights in the given label order; classes absent from training weigh 1"""
        return [self.weights.get(label, 1.0) for label in labels]


def require_strategy(plan: RebalancePlan, expected: Strategy) -> None:
    if plan.strategy is not expected:
        raise BadRebalancePlan(f"plan strategy is {plan.strategy.value}, expected {expected.value}")


def _group_by_label(examples) -> Dict[Label, List[Example]]:
    groups: Dict[Label, List[Example]] = {}
    for example in examples:
        groups.setdefault(example.label, []).append(example)
    return groups


def expected_counts(total: int, plan: RebalancePlan) -> Dict[Label, int]:
    """Per-class target counts e_c: largest-remainder rounding of total * target"""
    return largest_remainder(total, plan.target_fractions())


def oversample(corpus: Corpus, plan: RebalancePlan) -> Corpus:
    """Raise every class to the largest class count by duplicating rows with replacement"""
    require_strategy(plan, Strategy.OVERSAMPLE)
    if len(corpus) == 0:
        raise EmptyCorpus()

    rng = np.random.default_rng(plan.seed)
    groups = _group_by_label(corpus)
    ceiling = max(len(members) for members in groups.values())

    duplicates: List[Example] = []
    for label in sort_labels(groups):
        members = groups[label]
        deficit = ceiling - len(members)
        if deficit > 0:
            picks = rng.integers(0, len(members), size=deficit)
            duplicates.extend(members[i] for i in picks)

    logger.info(f"Over-sampling added {len(duplicates)} duplicate rows (every class raised to {ceiling})")
    return corpus.replace_examples(list(corpus.examples) + duplicates)


def over_under_sample(corpus: Corpus, plan: RebalancePlan) -> Corpus:
    """
    Move every class to its expected count while keeping the corpus length.

    Classes above target are under-sampled without replacement, classes below
    are topped up with duplicates. Kept rows stay in their original order and
    duplicates follow them.
    """
    require_strategy(plan, Strategy.OVER_UNDER)
    if len(corpus) == 0:
        raise EmptyCorpus()

    positions: Dict[Label, List[int]] = {}
    for position, example in enumerate(corpus):
        positions.setdefault(example.label, []).append(position)
    targets = expected_counts(len(corpus), plan)
    for label in sort_labels(targets):
        if targets[label] > 0 and label not in positions:
            raise MissingTargetClass(label)

    rng = np.random.default_rng(plan.seed)
    kept_positions = set()
    duplicates: List[Example] = []
    for label in sort_labels(positions):
        members = positions[label]
        goal = targets.get(label, 0)
        if len(members) > goal:
            chosen = rng.choice(len(members), size=goal, replace=False)
            kept_positions.update(members[i] for i in chosen)
        else:
            kept_positions.update(members)
            deficit = goal - len(members)
            if deficit > 0:
                picks = rng.integers(0, len(members), size=deficit)
                duplicates.extend(corpus.examples[members[i]] for i in picks)

    kept = [example for position, example in enumerate(corpus) if position in kept_positions]
    result = corpus.replace_examples(kept + duplicates)
    logger.info(f"Over-under sampling: {dict(Counter(e.label.value for e in result))}")
    return result


def class_weights(corpus: Corpus) -> ClassWeights:
    """Inverse-frequency weights N / (K * n_c) over the classes present"""
    if len(corpus) == 0:
        raise EmptyCorpus()
    counts = Counter(example.label for example in corpus)
    total = len(corpus)
    classes = len(counts)
    return ClassWeights({label: total / (classes * counts[label]) for label in sort_labels(counts)})


def rebalance_corpus(corpus: Corpus, plan: RebalancePlan) -> Corpus:
    """Apply a row-level strategy; none, smote and class_weights leave rows untouched"""
    if plan.strategy is Strategy.OVERSAMPLE:
        return oversample(corpus, plan)
    if plan.strategy is Strategy.OVER_UNDER:
        return over_under_sample(corpus, plan)
    return corpus
