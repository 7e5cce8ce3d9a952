import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from config.settings import DEFAULT_MAX_LEN, DEFAULT_MAX_VOCAB, DEFAULT_PATIENCE, DEVICE
from corpus.dataset import Corpus
from corpus.labels import Label, parse_label, sort_labels
from encoder.vocab import PAD_ID, Vocab, tokenize_to_ids
from neural.checkpoints import CheckpointStore
from neural.early_stopping import NeuralError, TrainingHistory
from neural.trainer import (LoopConfig, dev_score, label_tensor, make_loader, run_training, seed_everything,
                            weighted_loss)
from rebalance.sampler import ClassWeights

"""
Baseline recurrent classifier: word embeddings, spatial dropout, a single
LSTM layer and a softmax output.
"""

logger = logging.getLogger(__name__)

MODEL_FILE = "model.pt"
META_FILE = "lstm.json"


class VocabMismatch(NeuralError):
    def __init__(self, vocab_len: int, vocab_size: int):
        super().__init__(f"Vocabulary holds {vocab_len} tokens but the model was sized for {vocab_size}")


class EmptyDev(NeuralError):
    def __init__(self):
        super().__init__("Dev corpus is empty; early stopping needs a dev split")


class LabelCountMismatch(NeuralError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"Training labels span {found} classes but the model has {expected} outputs")


@dataclass(frozen=True)
class LstmSpec:
    vocab_size: int
    num_classes: int
    embed_dim: int = 100
    spatial_dropout: float = 0.2
    lstm_layers: int = 1
    hidden_dim: int = 64
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self):
        if not 1 <= self.vocab_size <= DEFAULT_MAX_VOCAB:
            raise ValueError(f"vocab_size must be in [1, {DEFAULT_MAX_VOCAB}], got {self.vocab_size}")
        if not 0.0 <= self.spatial_dropout < 1.0:
            raise ValueError(f"spatial_dropout must be in [0, 1), got {self.spatial_dropout}")
        if min(self.num_classes, self.embed_dim, self.lstm_layers, self.hidden_dim, self.max_len) < 1:
            raise ValueError("LSTM dimensions must be positive")


@dataclass(frozen=True)
class LstmTraining:
    """Optimisation settings for train_lstm"""
    max_epochs: int = 30
    patience: int = DEFAULT_PATIENCE
    learning_rate: float = 1e-3
    batch_size: int = 32
    monitor: str = "macro_f1"
    class_weights: Optional[ClassWeights] = None
    device: str = DEVICE


class LstmClassifier(nn.Module):
    def __init__(self, spec: LstmSpec):
        super().__init__()
        self.spec = spec
        # ids 0 and 1 are padding and unknown
        self.embedding = nn.Embedding(spec.vocab_size + 2, spec.embed_dim, padding_idx=PAD_ID)
        # Dropout1d on (batch, channels, time) zeroes whole embedding channels for a sequence
        self.spatial_dropout = nn.Dropout1d(spec.spatial_dropout)
        self.lstm = nn.LSTM(spec.embed_dim, spec.hidden_dim, num_layers=spec.lstm_layers, batch_first=True)
        # One bias vector per gate: the hidden-to-hidden bias stays at zero
        for layer in range(spec.lstm_layers):
            bias = getattr(self.lstm, f"bias_hh_l{layer}")
            nn.init.zeros_(bias)
            bias.requires_grad_(False)
        self.linear = nn.Linear(spec.hidden_dim, spec.num_classes)

    def forward(self, input_ids: torch.Tensor, lengths: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Logits of shape (batch, num_classes)"""
        if lengths is None:
            lengths = (input_ids != PAD_ID).sum(dim=1)
        lengths = lengths.clamp(min=1).cpu()

        embedded = self.embedding(input_ids)
        embedded = self.spatial_dropout(embedded.permute(0, 2, 1)).permute(0, 2, 1)
        packed = pack_padded_sequence(embedded, lengths, batch_first=True, enforce_sorted=False)
        _, (hidden, _) = self.lstm(packed)
        return self.linear(hidden[-1])

    def predict_proba(self, input_ids: torch.Tensor, lengths: Optional[torch.Tensor] = None) -> torch.Tensor:
        return torch.softmax(self.forward(input_ids, lengths), dim=-1)


def trainable_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


@dataclass
class TrainedLstm:
    model: LstmClassifier
    vocab: Vocab
    label_index: List[Label]

    @property
    def spec(self) -> LstmSpec:
        return self.model.spec


def encode_texts(texts: Sequence[str], vocab: Vocab, max_len: int) -> Tuple[torch.Tensor, torch.Tensor]:
    ids = torch.tensor([tokenize_to_ids(text, vocab, max_len) for text in texts], dtype=torch.long)
    ids = ids.reshape(len(texts), max_len)
    return ids, (ids != PAD_ID).sum(dim=1)


def _predict_indices(model: LstmClassifier, ids: torch.Tensor, lengths: torch.Tensor,
                     batch_size: int, device: str) -> List[int]:
    predicted: List[int] = []
    model.eval()
    with torch.no_grad():
        for start in range(0, len(ids), batch_size):
            logits = model(ids[start:start + batch_size].to(device), lengths[start:start + batch_size])
            predicted.extend(logits.argmax(dim=-1).cpu().tolist())
    return predicted


def train_lstm(corpus: Corpus, vocab: Vocab, spec: LstmSpec, dev: Corpus, seed: int = 0,
               training: Optional[LstmTraining] = None, label_index: Optional[List[Label]] = None,
               checkpoints: Optional[CheckpointStore] = None) -> Tuple[TrainedLstm, TrainingHistory]:
    """Train with cross-entropy and dev-F1 early stopping; returns the best dev epoch's model"""
    training = training or LstmTraining()
    if len(vocab) > spec.vocab_size:
        raise VocabMismatch(len(vocab), spec.vocab_size)
    if len(dev) == 0:
        raise EmptyDev()
    label_index = label_index or sort_labels(corpus.labels)
    if len(label_index) != spec.num_classes:
        raise LabelCountMismatch(len(label_index), spec.num_classes)

    loop = LoopConfig(max_epochs=training.max_epochs, patience=training.patience,
                      learning_rate=training.learning_rate, batch_size=training.batch_size,
                      monitor=training.monitor, seed=seed, device=training.device)
    generator = seed_everything(seed)
    model = LstmClassifier(spec).to(loop.device)

    ids, lengths = encode_texts(corpus.texts, vocab, spec.max_len)
    loader = make_loader([ids, lengths, label_tensor(corpus.labels, label_index)], loop.batch_size,
                         shuffle=True, generator=generator)
    dev_ids, dev_lengths = encode_texts(dev.texts, vocab, spec.max_len)
    loss_fn = weighted_loss(label_index, training.class_weights, loop.device)
    optimizer = torch.optim.Adam([p for p in model.parameters() if p.requires_grad], lr=loop.learning_rate)

    def batch_loss(network: nn.Module, batch: tuple) -> torch.Tensor:
        batch_ids, batch_lengths, targets = batch
        return loss_fn(network(batch_ids, batch_lengths), targets)

    def score_dev(network: nn.Module) -> float:
        predicted = _predict_indices(network, dev_ids, dev_lengths, loop.batch_size, loop.device)
        return dev_score(dev.labels, [label_index[i] for i in predicted], label_index, loop.monitor)

    trained = TrainedLstm(model=model, vocab=vocab, label_index=list(label_index))

    def save_checkpoint(_: nn.Module, target: Path) -> None:
        save_lstm(trained, target)

    logger.info(f"Training LSTM on {len(corpus)} examples ({trainable_parameters(model)} parameters)")
    history = run_training(model, loader, batch_loss, score_dev, optimizer, loop,
                           checkpoints=checkpoints, save_checkpoint=save_checkpoint, description="lstm")
    return trained, history


def predict_lstm(trained: TrainedLstm, texts: Sequence[str], batch_size: int = 256) -> List[Label]:
    if not texts:
        return []
    ids, lengths = encode_texts(texts, trained.vocab, trained.spec.max_len)
    device = next(trained.model.parameters()).device
    indices = _predict_indices(trained.model, ids, lengths, batch_size, str(device))
    return [trained.label_index[i] for i in indices]


def predict_proba_lstm(trained: TrainedLstm, texts: Sequence[str]) -> np.ndarray:
    if not texts:
        return np.zeros((0, trained.spec.num_classes))
    ids, lengths = encode_texts(texts, trained.vocab, trained.spec.max_len)
    trained.model.eval()
    with torch.no_grad():
        return trained.model.predict_proba(ids, lengths).cpu().numpy()


def save_lstm(trained: TrainedLstm, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(trained.model.state_dict(), directory / MODEL_FILE)
    meta = {
        "spec": asdict(trained.spec),
        "vocab": trained.vocab.to_dict(),
        "label_index": [label.value for label in trained.label_index],
    }
    (directory / META_FILE).write_text(json.dumps(meta, ensure_ascii=False) + "\n", encoding="utf-8")
    return directory


def load_lstm(directory: Union[str, Path], device: str = DEVICE) -> TrainedLstm:
    directory = Path(directory)
    meta = json.loads((directory / META_FILE).read_text(encoding="utf-8"))
    model = LstmClassifier(LstmSpec(**meta["spec"]))
    model.load_state_dict(torch.load(directory / MODEL_FILE, map_location=device))
    model.to(device).eval()
    return TrainedLstm(
        model=model,
        vocab=Vocab.from_dict(meta["vocab"]),
        label_index=[parse_label(value) for value in meta["label_index"]],
    )
