import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Union

from config.settings import DEFAULT_PATIENCE
from utils.errors import PipelineError


class NeuralError(PipelineError):
    """Base class for neural training errors"""


class EmptyHistory(NeuralError):
    def __init__(self):
        super().__init__("Training history has no epochs")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    dev_metric: float
    seconds: float = 0.0


@dataclass
class TrainingHistory:
    """Append-only per-epoch records, epochs numbered from 1"""
    records: List[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, train_loss: float, dev_metric: float, seconds: float = 0.0) -> EpochRecord:
        record = EpochRecord(len(self.records) + 1, float(train_loss), float(dev_metric), float(seconds))
        self.records.append(record)
        return record

    @property
    def dev_metrics(self) -> List[float]:
        return [record.dev_metric for record in self.records]

    @property
    def train_losses(self) -> List[float]:
        return [record.train_loss for record in self.records]

    def best_epoch(self) -> int:
        """Epoch of the first strict maximum; later ties are not improvements"""
        if not self.records:
            raise EmptyHistory()
        best = self.records[0]
        for record in self.records[1:]:
            if record.dev_metric > best.dev_metric:
                best = record
        return best.epoch

    def best_metric(self) -> float:
        return self.records[self.best_epoch() - 1].dev_metric

    def to_json(self) -> str:
        return json.dumps({"epochs": [asdict(record) for record in self.records]}, indent=2)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainingHistory":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([EpochRecord(**record) for record in payload["epochs"]])


def should_stop(history: TrainingHistory, patience: int = DEFAULT_PATIENCE) -> bool:
    """True once `patience` epochs have passed since the best dev metric without a strict improvement"""
    if patience < 1:
        raise ValueError(f"patience must be positive, got {patience}")
    best = history.best_epoch()
    return len(history) - best >= patience


def epochs_without_improvement(history: TrainingHistory) -> Optional[int]:
    if not history.records:
        return None
    return len(history) - history.best_epoch()
