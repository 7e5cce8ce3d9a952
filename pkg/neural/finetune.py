import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from torch import nn

from config.settings import DEFAULT_PATIENCE, DEVICE, MODEL_CACHE_DIR, resolve_encoder_id
from corpus.dataset import Corpus
from corpus.labels import Label, parse_label, sort_labels
from neural.checkpoints import CheckpointStore
from neural.early_stopping import NeuralError, TrainingHistory
from neural.lstm import EmptyDev, LabelCountMismatch
from neural.trainer import (LoopConfig, dev_score, label_tensor, make_loader, run_training, seed_everything,
                            weighted_loss)
from rebalance.sampler import ClassWeights
from utils.retry import HubRetry

"""
End-to-end fine-tuning of a pretrained encoder with a sequence-classification
head, using the shared early-stopping loop.
"""

logger = logging.getLogger(__name__)

META_FILE = "finetune.json"


class EncoderUnresolvable(NeuralError):
    def __init__(self, identifier: str, reason: str):
        self.identifier = identifier
        super().__init__(f"Cannot resolve encoder {identifier}: {reason}")


@dataclass(frozen=True)
class FinetuneSpec:
    encoder_id: str
    num_classes: int
    max_epochs: int = 10
    patience: int = DEFAULT_PATIENCE
    monitor: str = "macro_f1"
    learning_rate: float = 2e-5
    batch_size: int = 16
    seed: int = 0
    max_length: int = 128
    weight_decay: float = 0.0
    class_weights: Optional[ClassWeights] = None
    device: str = DEVICE

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")

    @property
    def source(self) -> str:
        """Local directory when one exists, otherwise the resolved hub identifier"""
        if Path(self.encoder_id).expanduser().is_dir():
            return str(Path(self.encoder_id).expanduser())
        return resolve_encoder_id(self.encoder_id)


@dataclass
class TrainedClassifier:
    model: Any
    tokenizer: Any
    label_index: List[Label]
    max_length: int


def _load(spec: FinetuneSpec):
    source = spec.source
    try:
        tokenizer = HubRetry.load_tokenizer(source, cache_dir=MODEL_CACHE_DIR)
        model = HubRetry.load_classifier(source, cache_dir=MODEL_CACHE_DIR, num_labels=spec.num_classes,
                                         ignore_mismatched_sizes=True)
    except Exception as e:
        raise EncoderUnresolvable(spec.encoder_id, str(e)) from e
    return tokenizer, model


def _tokenize(tokenizer, texts: Sequence[str], max_length: int) -> Tuple[torch.Tensor, torch.Tensor]:
    encoded = tokenizer(list(texts), padding="max_length", truncation=True, max_length=max_length,
                        return_tensors="pt")
    return encoded["input_ids"], encoded["attention_mask"]


def batch_logits(model, input_ids: torch.Tensor, attention_mask: torch.Tensor, batch_size: int,
                 device: str) -> torch.Tensor:
    chunks = []
    model.eval()
    with torch.no_grad():
        for start in range(0, len(input_ids), batch_size):
            output = model(input_ids=input_ids[start:start + batch_size].to(device),
                           attention_mask=attention_mask[start:start + batch_size].to(device))
            chunks.append(output.logits.cpu())
    return torch.cat(chunks)


def finetune(corpus: Corpus, dev: Corpus, spec: FinetuneSpec, label_index: Optional[List[Label]] = None,
             checkpoints: Optional[CheckpointStore] = None) -> Tuple[TrainedClassifier, TrainingHistory]:
    """
    Fine-tune spec.encoder_id on corpus with dev-F1 early stopping.
    History keeps every epoch run; the returned model is the best dev epoch.
    """
    if len(dev) == 0:
        raise EmptyDev()
    label_index = label_index or sort_labels(corpus.labels)
    if len(label_index) != spec.num_classes:
        raise LabelCountMismatch(len(label_index), spec.num_classes)

    loop = LoopConfig(max_epochs=spec.max_epochs, patience=spec.patience, learning_rate=spec.learning_rate,
                      batch_size=spec.batch_size, monitor=spec.monitor, seed=spec.seed, device=spec.device)
    generator = seed_everything(spec.seed)
    tokenizer, model = _load(spec)
    model.to(loop.device)

    ids, mask = _tokenize(tokenizer, corpus.texts, spec.max_length)
    loader = make_loader([ids, mask, label_tensor(corpus.labels, label_index)], loop.batch_size,
                         shuffle=True, generator=generator)
    dev_ids, dev_mask = _tokenize(tokenizer, dev.texts, spec.max_length)
    loss_fn = weighted_loss(label_index, spec.class_weights, loop.device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=loop.learning_rate, weight_decay=spec.weight_decay)

    def batch_loss(network: nn.Module, batch: tuple) -> torch.Tensor:
        batch_ids, batch_mask, targets = batch
        return loss_fn(network(input_ids=batch_ids, attention_mask=batch_mask).logits, targets)

    def score_dev(network: nn.Module) -> float:
        logits = batch_logits(network, dev_ids, dev_mask, loop.batch_size, loop.device)
        predicted = [label_index[i] for i in logits.argmax(dim=-1).tolist()]
        return dev_score(dev.labels, predicted, label_index, loop.monitor)

    trained = TrainedClassifier(model=model, tokenizer=tokenizer, label_index=list(label_index),
                                max_length=spec.max_length)

    def save_checkpoint(_: nn.Module, target: Path) -> None:
        save_finetuned(trained, target)

    logger.info(f"Fine-tuning {spec.source} on {len(corpus)} examples, {spec.num_classes} classes")
    history = run_training(model, loader, batch_loss, score_dev, optimizer, loop,
                           checkpoints=checkpoints, save_checkpoint=save_checkpoint, description="finetune")
    return trained, history


def finetuned_logits(trained: TrainedClassifier, texts: Sequence[str], batch_size: int = 32) -> np.ndarray:
    if not texts:
        return np.zeros((0, len(trained.label_index)))
    ids, mask = _tokenize(trained.tokenizer, texts, trained.max_length)
    device = str(next(trained.model.parameters()).device)
    return batch_logits(trained.model, ids, mask, batch_size, device).numpy()


def predict_finetuned(trained: TrainedClassifier, texts: Sequence[str], batch_size: int = 32) -> List[Label]:
    logits = finetuned_logits(trained, texts, batch_size)
    return [trained.label_index[i] for i in logits.argmax(axis=-1).tolist()]


def save_finetuned(trained: TrainedClassifier, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    trained.model.save_pretrained(directory)
    trained.tokenizer.save_pretrained(directory)
    meta = {"label_index": [label.value for label in trained.label_index], "max_length": trained.max_length}
    (directory / META_FILE).write_text(json.dumps(meta) + "\n", encoding="utf-8")
    return directory


def load_finetuned(directory: Union[str, Path], device: str = DEVICE) -> TrainedClassifier:
    directory = Path(directory)
    meta_path = directory / META_FILE
    if not meta_path.is_file():
        raise EncoderUnresolvable(str(directory), "not a fine-tuned checkpoint")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    label_index = [parse_label(value) for value in meta["label_index"]]
    try:
        tokenizer = HubRetry.load_tokenizer(str(directory))
        model = HubRetry.load_classifier(str(directory), num_labels=len(label_index))
    except Exception as e:
        raise EncoderUnresolvable(str(directory), str(e)) from e
    model.to(device).eval()
    return TrainedClassifier(model=model, tokenizer=tokenizer, label_index=label_index,
                             max_length=int(meta["max_length"]))
