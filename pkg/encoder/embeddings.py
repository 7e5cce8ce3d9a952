import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from utils.errors import PipelineError
from utils.hashing import stable_hash

"""
Sentence-embedding matrices and their on-disk cache.
Cache layout: 8-byte magic, little-endian uint64 N and d, then N*d
row-major float32 values.
"""

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"ACDEMB01"
_HEADER = struct.Struct("<8sQQ")


class EncoderError(PipelineError):
    """Base class for encoder errors"""


class BackendUnavailable(EncoderError):
    pass


class EmbeddingDimMismatch(EncoderError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Backend declared dimension {expected} but produced {actual}")


class NonFiniteEmbedding(EncoderError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"Embedding row {row} contains NaN or Inf")


@dataclass(frozen=True)
class EmbeddingMatrix:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise EncoderError(f"Embedding matrix must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def empty(cls, dim: int) -> "EmbeddingMatrix":
        return cls(np.zeros((0, dim)))


def check_finite(values: np.ndarray) -> None:
    bad_rows = np.where(~np.isfinite(values).all(axis=1))[0]
    if len(bad_rows):
        raise NonFiniteEmbedding(int(bad_rows[0]))


def encode(texts: List[str], backend) -> EmbeddingMatrix:
    """Embed texts row by row with a backend running in inference mode"""
    if not texts:
        raise EncoderError("encode needs at least one text")
    values = np.asarray(backend.embed(list(texts)), dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != len(texts):
        raise EncoderError(f"Backend returned shape {values.shape} for {len(texts)} texts")
    if values.shape[1] != backend.dim:
        raise EmbeddingDimMismatch(backend.dim, values.shape[1])
    check_finite(values)
    return EmbeddingMatrix(values)


def save_embeddings(matrix: EmbeddingMatrix, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows, dim = matrix.values.shape
    with path.open("wb") as handle:
        handle.write(_HEADER.pack(CACHE_MAGIC, rows, dim))
        handle.write(np.ascontiguousarray(matrix.values, dtype="<f4").tobytes())
    return path


def load_embeddings(path: Union[str, Path]) -> EmbeddingMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise EncoderError(f"{path}: truncated embedding cache")
    magic, rows, dim = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise EncoderError(f"{path}: not an embedding cache file")
    expected = _HEADER.size + rows * dim * 4
    if len(raw) != expected:
        raise EncoderError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, dim)
    return EmbeddingMatrix(values.astype(np.float64))


def encode_cached(texts: List[str], backend, cache_dir: Optional[Union[str, Path]]) -> EmbeddingMatrix:
    """
    encode() with a file cache keyed by backend identity and the exact texts.
    Cached matrices round-trip through float32.
    """
    if cache_dir is None:
        return encode(texts, backend)
    key = stable_hash({"backend": backend.fingerprint(), "texts": list(texts)})
    path = Path(cache_dir) / f"{key[:32]}.emb"
    if path.is_file():
        logger.info(f"Loading cached embeddings from {path}")
        cached = load_embeddings(path)
        if cached.values.shape == (len(texts), backend.dim):
            return cached
        logger.warning(f"Ignoring stale embedding cache {path} with shape {cached.values.shape}")
    matrix = encode(texts, backend)
    save_embeddings(matrix, path)
    logger.info(f"Cached {len(texts)} embeddings at {path}")
    # serve the float32 view so cached and uncached runs agree
    return load_embeddings(path)
