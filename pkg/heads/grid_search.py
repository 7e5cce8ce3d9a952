import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import StratifiedKFold
from tqdm import tqdm

from config.settings import DEFAULT_FOLDS
from corpus.labels import Label, sort_labels
from encoder.embeddings import EmbeddingMatrix
from heads import classifier
from heads.classifier import HeadError, HeadSpec
from metrics.evaluation import weighted_f1

"""
Exhaustive hyperparameter search with stratified k-fold cross-validation,
scored by weighted F1.
"""

logger = logging.getLogger(__name__)

MIN_FOLDS = 5
MAX_FOLDS = 10


class EmptyGrid(HeadError):
    def __init__(self):
        super().__init__("Hyperparameter grid has no points")


class FoldsExceedClassCount(HeadError):
    def __init__(self, folds: int, label: Label, count: int):
        self.folds = folds
        self.label = label
        self.count = count
        super().__init__(f"{folds} folds requested but class {label} has only {count} examples")


@dataclass(frozen=True)
class GridSearchSpec:
    grid: Dict[str, List[Any]]
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    n_jobs: int = 1
    scoring: str = "weighted_f1"

    def __post_init__(self):
        if not MIN_FOLDS <= self.folds <= MAX_FOLDS:
            raise HeadError(f"folds must be in [{MIN_FOLDS}, {MAX_FOLDS}], got {self.folds}")
        if self.scoring != "weighted_f1":
            raise HeadError(f"Unsupported scoring {self.scoring!r}; grid search scores weighted_f1")

    def points(self) -> List[Dict[str, Any]]:
        """Grid points in declared order: first key slowest, last key fastest"""
        if not self.grid or any(len(values) == 0 for values in self.grid.values()):
            return []
        keys = list(self.grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.grid[k] for k in keys))]


@dataclass(frozen=True)
class GridSearchResult:
    best_params: Dict[str, Any]
    best_score: float
    points: List[Dict[str, Any]]
    fold_scores: List[List[float]]
    n_fits: int = 0

    @property
    def mean_scores(self) -> List[float]:
        return [float(np.mean(scores)) for scores in self.fold_scores]

    def to_record(self) -> Dict[str, Any]:
        return {
            "best_params": self.best_params,
            "best_score": self.best_score,
            "n_fits": self.n_fits,
            "points": [
                {"params": params, "fold_scores": scores, "mean": float(np.mean(scores))}
                for params, scores in zip(self.points, self.fold_scores)
            ],
        }


@dataclass
class _Fold:
    train: np.ndarray
    test: np.ndarray


def _fit_and_score(values: np.ndarray, labels: List[Label], spec: HeadSpec, fold: _Fold,
                   label_index: List[Label], seed: int) -> float:
    # Each call builds its own estimator; nothing is shared between (point, fold) pairs
    train = EmbeddingMatrix(values[fold.train])
    test = EmbeddingMatrix(values[fold.test])
    head = classifier.fit_head(train, [labels[i] for i in fold.train], spec, seed=seed)
    predicted = classifier.predict_head(head, test)
    return weighted_f1([labels[i] for i in fold.test], predicted, label_index)


def stratified_folds(labels: Sequence[Label], folds: int, seed: int) -> List[_Fold]:
    counts = {label: 0 for label in labels}
    for label in labels:
        counts[label] += 1
    for label in sort_labels(counts):
        if counts[label] < folds:
            raise FoldsExceedClassCount(folds, label, counts[label])
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    y = np.array([label.value for label in labels])
    return [_Fold(train, test) for train, test in splitter.split(np.zeros((len(y), 1)), y)]


def grid_search(embeddings: EmbeddingMatrix, labels: Sequence[Label], spec: HeadSpec,
                gs: GridSearchSpec, progress: Optional[bool] = None) -> GridSearchResult:
    """
    Evaluate every grid point on the same stratified folds and return the point
    with the highest mean weighted F1. Ties go to the earliest point.
    """
    points = gs.points()
    if not points:
        raise EmptyGrid()
    labels = list(labels)
    if len(embeddings) != len(labels):
        raise classifier.DimMismatch(len(embeddings), len(labels))

    folds = stratified_folds(labels, gs.folds, gs.seed)
    label_index = sort_labels(labels)
    tasks = [(p, f) for p in range(len(points)) for f in range(len(folds))]
    logger.info(f"Grid search over {len(points)} points x {len(folds)} folds for {spec.kind.value}")

    iterator = tqdm(tasks, desc=f"grid {spec.kind.value}", disable=None if progress is None else not progress)
    scores = Parallel(n_jobs=gs.n_jobs)(
        delayed(_fit_and_score)(embeddings.values, labels, spec.with_params(points[p]), folds[f],
                                label_index, gs.seed)
        for p, f in iterator
    )

    fold_scores = [list(scores[p * len(folds):(p + 1) * len(folds)]) for p in range(len(points))]
    means = [float(np.mean(s)) for s in fold_scores]
    # np.argmax returns the first maximal index
    best = int(np.argmax(means))
    for params, mean in zip(points, means):
        logger.debug(f"  {params}: {mean:.4f}")
    logger.info(f"Best point {points[best]} with mean weighted F1 {means[best]:.4f}")

    return GridSearchResult(
        best_params=points[best],
        best_score=means[best],
        points=points,
        fold_scores=fold_scores,
        n_fits=len(scores),
    )
