import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator

from config.settings import DEFAULT_FOLDS, DEFAULT_MAX_LEN, DEFAULT_MAX_VOCAB, DEFAULT_PATIENCE, DEFAULT_SMOTE_K, \
    HASHING_ENCODER_ID
from utils.errors import ConfigError
from utils.hashing import stable_hash

"""
Run configuration: one TOML file per run, validated into a RunConfig.
`--set section.key=value` overrides are merged into the raw mapping before validation.
"""

logger = logging.getLogger(__name__)

PathList = Union[Path, List[Path]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetConfig(_Section):
    tag: Literal["tamil", "codemix", "combined", "synthetic"]
    train: PathList
    dev: Optional[PathList] = None
    test: Optional[PathList] = None

    def split_paths(self, split: str) -> List[Path]:
        value = getattr(self, split)
        if value is None:
            return []
        return value if isinstance(value, list) else [value]

    @field_validator("train", "dev", "test")
    @classmethod
    def _files_exist(cls, value: Optional[PathList], info: ValidationInfo) -> Optional[PathList]:
        if isinstance(value, list) and info.data.get("tag") != "combined":
            raise ValueError("several files are only allowed for the combined dataset")
        for path in (value if isinstance(value, list) else [value] if value is not None else []):
            if not path.is_file():
                raise ValueError(f"no such file {path}")
        return value


class CleaningSection(_Section):
    strip_urls: bool = True
    strip_punctuation: bool = True
    remove_stopwords: bool = True
    replace_emojis: bool = True
    stopwords_path: Optional[Path] = None
    emoji_map_path: Optional[Path] = None
    # Per-family on/off; unset families use the pipeline defaults
    families: Dict[Literal["ensemble", "rnn", "transformer"], bool] = Field(default_factory=dict)

    def flags(self) -> Dict[str, bool]:
        return {
            "strip_urls": self.strip_urls,
            "strip_punctuation": self.strip_punctuation,
            "remove_stopwords": self.remove_stopwords,
            "replace_emojis": self.replace_emojis,
        }


class RebalanceSection(_Section):
    strategy: Literal["none", "oversample", "over_under", "smote", "class_weights"] = "none"
    target: Optional[Dict[str, float]] = None
    seed: int = 0
    smote_k: int = Field(DEFAULT_SMOTE_K, ge=1)


class EncoderSection(_Section):
    id: str = HASHING_ENCODER_ID
    path: Optional[Path] = None
    pooling: Literal["cls", "mean"] = "cls"
    dim: int = Field(64, ge=2)
    max_length: int = Field(128, ge=1)
    cache_dir: Optional[Path] = None


class HeadSection(_Section):
    kind: Literal["logistic_regression", "decision_tree", "svc", "random_forest", "gradient_boosted_trees", "mlp"]
    grid: Optional[Dict[str, List[Any]]] = None
    folds: int = Field(DEFAULT_FOLDS, ge=5, le=10)
    n_jobs: int = 1


class LstmSection(_Section):
    embed_dim: int = Field(100, ge=1)
    spatial_dropout: float = Field(0.2, ge=0.0, lt=1.0)
    lstm_layers: int = Field(1, ge=1)
    hidden_dim: int = Field(64, ge=1)
    max_len: int = Field(DEFAULT_MAX_LEN, ge=1)
    max_vocab: int = Field(DEFAULT_MAX_VOCAB, ge=1, le=DEFAULT_MAX_VOCAB)
    max_epochs: int = Field(30, ge=1)
    patience: int = Field(DEFAULT_PATIENCE, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    batch_size: int = Field(32, ge=1)
    monitor: Literal["macro_f1", "weighted_f1"] = "macro_f1"


class FinetuneSection(_Section):
    max_epochs: int = Field(10, ge=1)
    patience: int = Field(DEFAULT_PATIENCE, ge=1)
    learning_rate: float = Field(2e-5, ge=0.0)
    batch_size: int = Field(16, ge=1)
    max_length: int = Field(128, ge=1)
    weight_decay: float = Field(0.0, ge=0.0)
    monitor: Literal["macro_f1", "weighted_f1"] = "macro_f1"


class ModelSection(_Section):
    head: Optional[HeadSection] = None
    lstm: Optional[LstmSection] = None
    finetune: Optional[FinetuneSection] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        present = [name for name in ("head", "lstm", "finetune") if getattr(self, name) is not None]
        if len(present) != 1:
            raise ValueError(f"exactly one of head, lstm, finetune is required, found {present or 'none'}")
        return self

    @property
    def kind(self) -> str:
        return next(name for name in ("head", "lstm", "finetune") if getattr(self, name) is not None)


class RunConfig(_Section):
    seed: int = 0
    output_dir: Path
    name: Optional[str] = None
    dataset: DatasetConfig
    cleaning: CleaningSection = Field(default_factory=CleaningSection)
    rebalance: RebalanceSection = Field(default_factory=RebalanceSection)
    encoder: EncoderSection = Field(default_factory=EncoderSection)
    model: ModelSection

    @field_validator("name")
    @classmethod
    def _name_is_plain(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and (not value.strip() or "\t" in value or "\n" in value):
            raise ValueError("name must be a non-empty single-line string")
        return value

    @property
    def family(self) -> str:
        return {"head": "ensemble", "lstm": "rnn", "finetune": "transformer"}[self.model.kind]

    @property
    def model_name(self) -> str:
        """Display name in reports and results grids"""
        if self.name:
            return self.name
        if self.model.kind == "head":
            return self.model.head.kind
        if self.model.kind == "lstm":
            return "lstm"
        return self.encoder.id


def config_hash(config: RunConfig) -> str:
    return stable_hash(config.model_dump(mode="json"))


def _parse_value(raw: str) -> Any:
    """TOML literal when it parses, otherwise the bare string"""
    try:
        return tomli.loads(f"value = {raw}")["value"]
    except tomli.TOMLDecodeError:
        return raw


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    for override in overrides:
        key, sep, value = override.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError("--set", f"expected section.key=value, got {override!r}")
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(key, f"{part} is not a section")
            node = child
        node[parts[-1]] = _parse_value(value.strip())
        logger.info(f"Override {key} = {node[parts[-1]]!r}")
    return raw


def _field_path(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error["loc"]) or "config"


def validate_config(raw: Dict[str, Any]) -> RunConfig:
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(_field_path(first), first["msg"]) from e

    if config.rebalance.strategy == "smote" and config.model.kind != "head":
        raise ConfigError("rebalance.strategy", "smote works on sentence embeddings and needs a head model")
    if config.model.kind in ("lstm", "finetune") and config.dataset.dev is None:
        raise ConfigError("dataset.dev", "neural models need a dev split for early stopping")
    return config


def load_config(path: Union[str, Path], overrides: Sequence[str] = ()) -> RunConfig:
    """Read a TOML run file, apply --set overrides, and validate"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"no such file {path}")
    try:
        with path.open("rb") as handle:
            raw = tomli.load(handle)
    except tomli.TOMLDecodeError as e:
        raise ConfigError("config", f"{path}: {str(e)}") from e
    return validate_config(apply_overrides(raw, overrides))
