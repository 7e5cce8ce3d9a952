import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import joblib
import numpy as np
from sklearn.ensemble import HistGradientBoostingClassifier, RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.neural_network import MLPClassifier
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier

from corpus.labels import Label, parse_label, sort_labels
from encoder.embeddings import EmbeddingMatrix
from rebalance.sampler import ClassWeights
from utils.errors import PipelineError
from utils.hashing import stable_hash

"""
Classical classifier heads over frozen sentence embeddings.
Every head kind is backed by a scikit-learn estimator.
"""

logger = logging.getLogger(__name__)

BLOB_FORMAT_VERSION = 1


class HeadError(PipelineError):
    """Base class for classifier-head errors"""


class SingleClassTraining(HeadError):
    def __init__(self):
        super().__init__("Training labels hold fewer than two classes")


class DimMismatch(HeadError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected embeddings of dimension {expected}, got {actual}")


class ArtifactError(HeadError):
    pass


class HeadKind(str, Enum):
    LOGISTIC_REGRESSION = "logistic_regression"
    DECISION_TREE = "decision_tree"
    SVC = "svc"
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTED_TREES = "gradient_boosted_trees"
    MLP = "mlp"


# Estimator factories plus the fixed arguments that keep fits reproducible
ESTIMATORS = {
    HeadKind.LOGISTIC_REGRESSION: (LogisticRegression, {"max_iter": 2000}),
    HeadKind.DECISION_TREE: (DecisionTreeClassifier, {}),
    HeadKind.SVC: (SVC, {}),
    HeadKind.RANDOM_FOREST: (RandomForestClassifier, {"n_estimators": 200}),
    HeadKind.GRADIENT_BOOSTED_TREES: (HistGradientBoostingClassifier, {}),
    HeadKind.MLP: (MLPClassifier, {"max_iter": 500}),
}

# Kinds whose estimator takes a class_weight argument
WEIGHTED_KINDS = {
    HeadKind.LOGISTIC_REGRESSION,
    HeadKind.DECISION_TREE,
    HeadKind.SVC,
    HeadKind.RANDOM_FOREST,
    HeadKind.GRADIENT_BOOSTED_TREES,
}

# Default hyperparameter grids, at most 12 points each
DEFAULT_GRIDS = {
    HeadKind.LOGISTIC_REGRESSION: {"C": [0.01, 0.1, 1.0, 10.0]},
    HeadKind.DECISION_TREE: {"max_depth": [None, 10, 20], "min_samples_leaf": [1, 5]},
    HeadKind.SVC: {"C": [0.1, 1.0, 10.0], "kernel": ["linear", "rbf"]},
    HeadKind.RANDOM_FOREST: {"max_depth": [None, 20], "max_features": ["sqrt", "log2"]},
    HeadKind.GRADIENT_BOOSTED_TREES: {"learning_rate": [0.05, 0.1], "max_depth": [3, None], "max_iter": [100, 200]},
    HeadKind.MLP: {"hidden_layer_sizes": [(128,), (256,)], "alpha": [1e-4, 1e-3], "learning_rate_init": [1e-3]},
}


@dataclass(frozen=True)
class HeadSpec:
    kind: HeadKind
    hyperparams: Dict[str, Any] = field(default_factory=dict)
    class_weights: Optional[ClassWeights] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", HeadKind(self.kind))

    def with_params(self, params: Dict[str, Any]) -> "HeadSpec":
        return HeadSpec(kind=self.kind, hyperparams={**self.hyperparams, **params}, class_weights=self.class_weights)

    def describe(self) -> Dict[str, Any]:
        weights = None
        if self.class_weights is not None:
            weights = {label.value: value for label, value in self.class_weights.weights.items()}
        return {"kind": self.kind.value, "hyperparams": self.hyperparams, "class_weights": weights}


@dataclass(frozen=True)
class TrainedHead:
    spec: HeadSpec
    estimator: Any
    label_index: List[Label]
    dim: int
    train_fingerprint: str


def build_estimator(spec: HeadSpec, seed: int):
    factory, fixed = ESTIMATORS[spec.kind]
    params = {**fixed, **spec.hyperparams}
    if "random_state" in factory().get_params():
        params.setdefault("random_state", seed)
    if spec.class_weights is not None:
        if spec.kind in WEIGHTED_KINDS:
            params["class_weight"] = {label.value: weight for label, weight in spec.class_weights.weights.items()}
        else:
            logger.warning(f"{spec.kind.value} head takes no class weights; ignoring them")
    return factory(**params)


def train_fingerprint(embeddings: EmbeddingMatrix, labels: Sequence[Label], spec: HeadSpec, seed: int) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(embeddings.values).tobytes())
    digest.update("\n".join(label.value for label in labels).encode("utf-8"))
    digest.update(stable_hash({"spec": spec.describe(), "seed": seed}).encode("ascii"))
    return digest.hexdigest()


def fit_head(embeddings: EmbeddingMatrix, labels: Sequence[Label], spec: HeadSpec, seed: int = 0) -> TrainedHead:
    labels = list(labels)
    if len(embeddings) != len(labels):
        raise DimMismatch(len(embeddings), len(labels))
    label_index = sort_labels(labels)
    if len(label_index) < 2:
        raise SingleClassTraining()

    estimator = build_estimator(spec, seed)
    estimator.fit(embeddings.values, np.array([label.value for label in labels]))
    return TrainedHead(
        spec=spec,
        estimator=estimator,
        label_index=label_index,
        dim=embeddings.dim,
        train_fingerprint=train_fingerprint(embeddings, labels, spec, seed),
    )


def predict_head(head: TrainedHead, embeddings: EmbeddingMatrix) -> List[Label]:
    if len(embeddings) == 0:
        return []
    if embeddings.dim != head.dim:
        raise DimMismatch(head.dim, embeddings.dim)
    return [parse_label(value) for value in head.estimator.predict(embeddings.values)]


def save_head(head: TrainedHead, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> Path:
    """Versioned joblib blob with the training fingerprint embedded"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = {
        "format_version": BLOB_FORMAT_VERSION,
        "train_fingerprint": head.train_fingerprint,
        "spec": head.spec.describe(),
        "label_index": [label.value for label in head.label_index],
        "dim": head.dim,
        "estimator": head.estimator,
        "extra": extra or {},
    }
    joblib.dump(blob, path)
    logger.info(f"Saved {head.spec.kind.value} head to {path}")
    return path


def load_head(path: Union[str, Path]) -> TrainedHead:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"No head artifact at {path}")
    blob = joblib.load(path)
    if not isinstance(blob, dict) or blob.get("format_version") != BLOB_FORMAT_VERSION:
        raise ArtifactError(f"{path}: unsupported head blob format")
    if not blob.get("train_fingerprint"):
        raise ArtifactError(f"{path}: head blob carries no train fingerprint")

    described = blob["spec"]
    weights = described.get("class_weights")
    spec = HeadSpec(
        kind=HeadKind(described["kind"]),
        hyperparams=described["hyperparams"],
        class_weights=ClassWeights({parse_label(k): v for k, v in weights.items()}) if weights else None,
    )
    return TrainedHead(
        spec=spec,
        estimator=blob["estimator"],
        label_index=[parse_label(value) for value in blob["label_index"]],
        dim=int(blob["dim"]),
        train_fingerprint=blob["train_fingerprint"],
    )


def read_head_extra(path: Union[str, Path]) -> Dict[str, Any]:
    """The caller-supplied metadata saved alongside a head"""
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"No head artifact at {path}")
    return joblib.load(path).get("extra", {})
