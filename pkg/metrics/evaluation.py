import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from corpus.labels import Label
from utils.errors import PipelineError

"""
Confusion-matrix based multi-class evaluation.
Zero denominators score 0. The macro average runs over the classes that
occur in the gold labels.
"""

logger = logging.getLogger(__name__)


class MetricsError(PipelineError):
    """Base class for evaluation errors"""


class LengthMismatch(MetricsError):
    def __init__(self, gold: int, pred: int):
        super().__init__(f"{gold} gold labels but {pred} predictions")


class UnknownLabel(MetricsError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"Label {label} is not in the evaluated label list")


class EmptyMatrix(MetricsError):
    def __init__(self):
        super().__init__("Confusion matrix holds no examples")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns are predictions"""
    counts: np.ndarray
    labels: tuple

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class RunMeta:
    model: str = ""
    family: str = ""
    dataset: str = ""
    split: str = ""
    seed: Optional[int] = None


@dataclass(frozen=True)
class EvalReport:
    per_class: Dict[Label, ClassScores]
    macro_f1: float
    weighted_f1: float
    run_meta: RunMeta = field(default_factory=RunMeta)


def confusion(gold: Sequence[Label], pred: Sequence[Label], labels: Sequence[Label]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    if len(gold) == 0:
        raise EmptyMatrix()
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in index:
            raise UnknownLabel(g)
        if p not in index:
            raise UnknownLabel(p)
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(counts=counts, labels=tuple(labels))


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def report(cm: ConfusionMatrix, run_meta: Optional[RunMeta] = None) -> EvalReport:
    """Per-class precision/recall/F1 plus macro and support-weighted F1"""
    if cm.total == 0:
        raise EmptyMatrix()
    counts = cm.counts
    true_positive = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)

    per_class: Dict[Label, ClassScores] = {}
    for i, label in enumerate(cm.labels):
        precision = _ratio(true_positive[i], predicted[i])
        recall = _ratio(true_positive[i], support[i])
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_class[label] = ClassScores(float(precision), float(recall), float(f1), int(support[i]))

    present = [scores for scores in per_class.values() if scores.support > 0]
    macro = float(np.mean([scores.f1 for scores in present]))
    weighted = sum(scores.support * scores.f1 for scores in present) / sum(scores.support for scores in present)
    return EvalReport(per_class=per_class, macro_f1=macro, weighted_f1=float(weighted),
                      run_meta=run_meta or RunMeta())


def evaluate(gold: Sequence[Label], pred: Sequence[Label], labels: Sequence[Label],
             run_meta: Optional[RunMeta] = None) -> EvalReport:
    return report(confusion(gold, pred, labels), run_meta)


def weighted_f1(gold: Sequence[Label], pred: Sequence[Label], labels: Sequence[Label]) -> float:
    return evaluate(gold, pred, labels).weighted_f1


def macro_f1(gold: Sequence[Label], pred: Sequence[Label], labels: Sequence[Label]) -> float:
    return evaluate(gold, pred, labels).macro_f1


def format_report(result: EvalReport) -> str:
    """Line-oriented text record of a report"""
    meta = result.run_meta
    lines = [
        f"model={meta.model} family={meta.family} dataset={meta.dataset} split={meta.split} seed={meta.seed}",
        f"macro_f1={result.macro_f1:.6f}",
        f"weighted_f1={result.weighted_f1:.6f}",
    ]
    for label, scores in result.per_class.items():
        lines.append(
            f"class={label.value} precision={scores.precision:.6f} recall={scores.recall:.6f} "
            f"f1={scores.f1:.6f} support={scores.support}"
        )
    return "\n".join(lines) + "\n"
