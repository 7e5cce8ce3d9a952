import copy
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader, TensorDataset
from tqdm import tqdm

from config.settings import DEFAULT_PATIENCE
from corpus.labels import Label, sort_labels
from metrics.evaluation import evaluate
from neural.checkpoints import CheckpointStore
from neural.early_stopping import TrainingHistory, epochs_without_improvement, should_stop
from rebalance.sampler import ClassWeights

"""
Training loop shared by the LSTM and fine-tuned transformer models.
Each epoch trains on the shuffled training batches, scores the dev split and
stops early once the dev metric has not strictly improved for `patience` epochs.
The model handed back carries the weights of the best dev epoch.
"""

logger = logging.getLogger(__name__)

MONITORED_METRICS = ("macro_f1", "weighted_f1")


@dataclass(frozen=True)
class LoopConfig:
    max_epochs: int
    patience: int = DEFAULT_PATIENCE
    learning_rate: float = 1e-3
    batch_size: int = 32
    monitor: str = "macro_f1"
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if self.monitor not in MONITORED_METRICS:
            raise ValueError(f"monitor must be one of {MONITORED_METRICS}, got {self.monitor!r}")
        if self.max_epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ValueError("max_epochs, patience and batch_size must be positive")


def seed_everything(seed: int) -> torch.Generator:
    torch.manual_seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.use_deterministic_algorithms(True, warn_only=True)
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def make_loader(tensors: Sequence[torch.Tensor], batch_size: int, shuffle: bool,
                generator: Optional[torch.Generator] = None) -> DataLoader:
    return DataLoader(TensorDataset(*tensors), batch_size=batch_size, shuffle=shuffle, generator=generator)


def label_tensor(labels: Sequence[Label], label_index: List[Label]) -> torch.Tensor:
    position = {label: i for i, label in enumerate(label_index)}
    return torch.tensor([position[label] for label in labels], dtype=torch.long)


def weighted_loss(label_index: List[Label], class_weights: Optional[ClassWeights],
                  device: str = "cpu", dtype: torch.dtype = torch.float32) -> nn.CrossEntropyLoss:
    """Cross-entropy, weighted per class when class weights are given"""
    if class_weights is None:
        return nn.CrossEntropyLoss()
    weights = [class_weights.weights.get(label, 1.0) for label in label_index]
    return nn.CrossEntropyLoss(weight=torch.tensor(weights, dtype=dtype, device=device))


def dev_score(gold: Sequence[Label], predicted: Sequence[Label], label_index: List[Label], monitor: str) -> float:
    labels = sort_labels(list(label_index) + list(gold))
    result = evaluate(gold, predicted, labels)
    return result.macro_f1 if monitor == "macro_f1" else result.weighted_f1


def run_training(
    model: nn.Module,
    loader: DataLoader,
    batch_loss: Callable[[nn.Module, tuple], torch.Tensor],
    score_dev: Callable[[nn.Module], float],
    optimizer: torch.optim.Optimizer,
    config: LoopConfig,
    checkpoints: Optional[CheckpointStore] = None,
    save_checkpoint: Optional[Callable[[nn.Module, Path], None]] = None,
    description: str = "train",
) -> TrainingHistory:
    """Train until should_stop or max_epochs; restores the best-dev weights before returning"""
    history = TrainingHistory()
    best_state = None

    epochs = tqdm(range(1, config.max_epochs + 1), desc=description, disable=None)
    for epoch in epochs:
        started = time.time()
        model.train()
        losses = []
        for batch in loader:
            batch = tuple(t.to(config.device) for t in batch)
            optimizer.zero_grad()
            loss = batch_loss(model, batch)
            loss.backward()
            optimizer.step()
            losses.append(loss.item())

        model.eval()
        with torch.no_grad():
            metric = score_dev(model)
        record = history.append(float(np.mean(losses)) if losses else 0.0, metric, time.time() - started)
        epochs.set_postfix(loss=f"{record.train_loss:.4f}", dev=f"{metric:.4f}")

        improved = history.best_epoch() == epoch
        if improved:
            best_state = copy.deepcopy(model.state_dict())
        if checkpoints is not None and save_checkpoint is not None:
            checkpoints.save_epoch(epoch, lambda target: save_checkpoint(model, target))
            if improved:
                checkpoints.mark_best(epoch, metric)

        logger.info(f"{description} epoch {epoch}: loss {record.train_loss:.4f}, dev {config.monitor} {metric:.4f}")
        if should_stop(history, config.patience):
            logger.info(f"Early stopping after epoch {epoch}: "
                        f"{epochs_without_improvement(history)} epochs without improvement")
            break

    model.load_state_dict(best_state)
    model.eval()
    return history
