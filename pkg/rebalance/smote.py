import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.neighbors import NearestNeighbors

from corpus.labels import Label, sort_labels
from encoder.embeddings import EmbeddingMatrix, check_finite
from rebalance.sampler import RebalanceError, RebalancePlan, Strategy, require_strategy, expected_counts

"""
SMOTE over sentence embeddings.
Rows of text have no metric, so minority classes are interpolated in the
embedding space produced by the encoder.
"""

logger = logging.getLogger(__name__)


class ClassTooSmall(RebalanceError):
    def __init__(self, label: Label, size: int):
        self.label = label
        self.size = size
        super().__init__(f"Class {label} has {size} member(s); SMOTE needs at least 2")


@dataclass(frozen=True)
class SyntheticRow:
    """How one synthetic row was made: source + lam * (neighbour - source)"""
    source: int
    neighbour: int
    lam: float
    label: Label


@dataclass(frozen=True)
class SmoteResult:
    embeddings: EmbeddingMatrix
    labels: List[Label]
    provenance: List[SyntheticRow]

    @property
    def original_rows(self) -> int:
        return len(self.labels) - len(self.provenance)


def _class_neighbours(points: np.ndarray, k: int) -> np.ndarray:
    """Indices (within the class) of each point's k nearest same-class neighbours, self excluded"""
    k = min(k, len(points) - 1)
    finder = NearestNeighbors(n_neighbors=k + 1, metric="euclidean").fit(points)
    _, indices = finder.kneighbors(points)
    neighbours = np.empty((len(points), k), dtype=int)
    for row, found in enumerate(indices):
        # duplicates can push self out of position 0
        others = [j for j in found if j != row][:k]
        neighbours[row] = others
    return neighbours


def smote_with_provenance(embeddings: EmbeddingMatrix, labels: Sequence[Label], plan: RebalancePlan) -> SmoteResult:
    """
    Synthesize rows for every class below its expected count.

    For each synthetic row a source x is drawn uniformly from the class, a
    neighbour among its smote_k nearest same-class points, and lam from
    U[0, 1]; the row is x + lam * (neighbour - x). Classes above target are
    left alone. Synthetic rows follow the originals.
    """
    require_strategy(plan, Strategy.SMOTE)
    values = np.asarray(embeddings.values, dtype=np.float64)
    labels = list(labels)
    if values.shape[0] != len(labels):
        raise RebalanceError(f"{values.shape[0]} embedding rows but {len(labels)} labels")
    check_finite(values)

    label_array = np.array([label.value for label in labels])
    targets = expected_counts(len(labels), plan)
    rng = np.random.default_rng(plan.seed)

    new_rows: List[np.ndarray] = []
    provenance: List[SyntheticRow] = []
    wanted = set(labels) | {label for label, count in targets.items() if count > 0}
    for label in sort_labels(wanted):
        members = np.flatnonzero(label_array == label.value)
        deficit = targets.get(label, 0) - len(members)
        if deficit <= 0:
            continue
        if len(members) < 2:
            raise ClassTooSmall(label, len(members))

        points = values[members]
        neighbours = _class_neighbours(points, plan.smote_k)
        for _ in range(deficit):
            source = int(rng.integers(0, len(members)))
            neighbour = int(neighbours[source, rng.integers(0, neighbours.shape[1])])
            lam = float(rng.uniform(0.0, 1.0))
            new_rows.append(points[source] + lam * (points[neighbour] - points[source]))
            provenance.append(SyntheticRow(int(members[source]), int(members[neighbour]), lam, label))
        logger.info(f"SMOTE synthesized {deficit} rows for {label}")

    if new_rows:
        values = np.vstack([values, np.vstack(new_rows)])
    return SmoteResult(
        embeddings=EmbeddingMatrix(values),
        labels=labels + [row.label for row in provenance],
        provenance=provenance,
    )


def smote(embeddings: EmbeddingMatrix, labels: Sequence[Label], plan: RebalancePlan) -> Tuple[EmbeddingMatrix, List[Label]]:
    result = smote_with_provenance(embeddings, labels, plan)
    return result.embeddings, result.labels
