import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional

import numpy as np

from config.settings import DEVICE, HASHING_ENCODER_ID, MODEL_CACHE_DIR, resolve_encoder_id
from encoder.embeddings import BackendUnavailable, EncoderError
from utils.hashing import seed_from
from utils.retry import HubRetry

"""
Encoder backends behind a single embed(texts) -> N x d boundary.
HashingBackend is the deterministic desk-scale stand-in; TransformerBackend
wraps a pretrained multilingual encoder from the model hub or a local directory.
"""

logger = logging.getLogger(__name__)

POOLING_CLS = "cls"
POOLING_MEAN = "mean"


class EncoderBackend(ABC):
    """Sentence encoder with a fixed output dimension"""

    identifier: str
    dim: int

    @abstractmethod
    def embed(self, texts: List[str]) -> np.ndarray:
        """Return a len(texts) x dim array"""

    def fingerprint(self) -> Dict[str, object]:
        """Everything that determines the embeddings; recorded with trained artifacts"""
        return {"id": self.identifier, "dim": self.dim}


class HashingBackend(EncoderBackend):
    """
    Mean of per-token random vectors. Each token's vector comes from a
    generator seeded with a stable hash of (seed, token), so embeddings are
    order-invariant bags of tokens and identical across processes.
    """

    def __init__(self, dim: int, seed: int = 0):
        if dim < 2:
            raise EncoderError(f"hashing backend needs dim >= 2, got {dim}")
        self.identifier = HASHING_ENCODER_ID
        self.dim = dim
        self.seed = seed
        self._vectors: Dict[str, np.ndarray] = {}

    def token_vector(self, token: str) -> np.ndarray:
        vector = self._vectors.get(token)
        if vector is None:
            rng = np.random.default_rng(seed_from(self.seed, token))
            vector = rng.standard_normal(self.dim)
            self._vectors[token] = vector
        return vector

    def embed(self, texts: List[str]) -> np.ndarray:
        rows = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = text.split()
            if tokens:
                rows[i] = np.mean([self.token_vector(token) for token in tokens], axis=0)
        return rows

    def fingerprint(self) -> Dict[str, object]:
        return {"id": self.identifier, "dim": self.dim, "seed": self.seed}


def test_backend(dim: int, seed: int = 0) -> HashingBackend:
    return HashingBackend(dim=dim, seed=seed)

# pytest would otherwise try to collect the factory above
test_backend.__test__ = False


class TransformerBackend(EncoderBackend):
    """
    Frozen pretrained encoder. Sentence embedding is the final-layer
    classification-token vector, or the attention-masked mean of the final
    layer with pooling="mean".
    """

    def __init__(self, identifier: str, path: Optional[str] = None, pooling: str = POOLING_CLS,
                 max_length: int = 128, batch_size: int = 32, device: str = DEVICE):
        if pooling not in (POOLING_CLS, POOLING_MEAN):
            raise EncoderError(f"Unknown pooling {pooling!r}")
        self.identifier = resolve_encoder_id(identifier)
        self.source = path or self.identifier
        self.pooling = pooling
        self.max_length = max_length
        self.batch_size = batch_size
        self.device = device

        try:
            self.tokenizer = HubRetry.load_tokenizer(self.source, cache_dir=MODEL_CACHE_DIR)
            self.model = HubRetry.load_encoder(self.source, cache_dir=MODEL_CACHE_DIR)
        except Exception as e:
            raise BackendUnavailable(f"Could not load encoder {self.source}: {str(e)}") from e

        self.model.to(self.device)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        logger.info(f"Encoder {self.source} ready (dim {self.dim}, pooling {self.pooling})")

    def embed(self, texts: List[str]) -> np.ndarray:
        import torch

        if not texts:
            return np.zeros((0, self.dim))
        batches = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                chunk = texts[start:start + self.batch_size]
                inputs = self.tokenizer(chunk, padding=True, truncation=True,
                                        max_length=self.max_length, return_tensors="pt").to(self.device)
                hidden = self.model(**inputs).last_hidden_state
                if self.pooling == POOLING_CLS:
                    pooled = hidden[:, 0, :]
                else:
                    mask = inputs["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                    pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
                batches.append(pooled.cpu().numpy())
        return np.vstack(batches)

    def fingerprint(self) -> Dict[str, object]:
        return {"id": self.identifier, "dim": self.dim, "pooling": self.pooling, "max_length": self.max_length}


def build_backend(identifier: str, path: Optional[str] = None, pooling: str = POOLING_CLS,
                  dim: int = 64, seed: int = 0, max_length: int = 128) -> EncoderBackend:
    """Backend factory keyed by the encoder.id config value"""
    if identifier == HASHING_ENCODER_ID:
        return HashingBackend(dim=dim, seed=seed)
    return TransformerBackend(identifier, path=path, pooling=pooling, max_length=max_length)
