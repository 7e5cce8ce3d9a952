import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

from config.run_config import RunConfig, config_hash
from corpus.labels import Label, parse_label
from encoder.backends import EncoderBackend, build_backend
from encoder.embeddings import encode_cached
from utils.errors import PipelineError

"""
On-disk layout of a run and the loaders that turn a trained artifact back
into a predictor.

    {output_dir}/prepared/{split}.tsv       cleaned splits
    {output_dir}/prepared/prepare.json      what prepare did
    {output_dir}/{run_id}/manifest.json     one per trained run
    {output_dir}/{run_id}/head.joblib       ensemble heads
    {output_dir}/{run_id}/model/            LSTM and fine-tuned models
    {output_dir}/checkpoints/{run_id}/      per-epoch checkpoints
    {output_dir}/results_grid.txt|.csv      every evaluated run
"""

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
PREPARE_FILE = "prepare.json"
HEAD_FILE = "head.joblib"
MODEL_DIR = "model"
HISTORY_FILE = "history.json"
GRID_SEARCH_FILE = "grid_search.json"
GRID_TEXT_FILE = "results_grid.txt"
GRID_CSV_FILE = "results_grid.csv"


class RunError(PipelineError):
    """A module error raised while running a command, with the run it belongs to"""

    def __init__(self, command: str, run_id: str, cause: Union[Exception, str]):
        self.command = command
        self.run_id = run_id
        self.cause = cause
        super().__init__(f"{command} failed for run {run_id}: {cause}")


class FingerprintMismatch(PipelineError):
    def __init__(self, what: str, recorded: Any, current: Any):
        self.what = what
        self.recorded = recorded
        self.current = current
        super().__init__(f"Artifact {what} {recorded!r} conflicts with the configuration's {current!r}")


def run_id_for(config: RunConfig) -> str:
    return f"{config.family}-{config_hash(config)[:12]}"


@dataclass(frozen=True)
class RunPaths:
    output_dir: Path
    run_id: str

    @classmethod
    def for_config(cls, config: RunConfig) -> "RunPaths":
        return cls(Path(config.output_dir), run_id_for(config))

    @property
    def prepared_dir(self) -> Path:
        return self.output_dir / "prepared"

    def prepared_split(self, split: str) -> Path:
        return self.prepared_dir / f"{split}.tsv"

    @property
    def run_dir(self) -> Path:
        return self.output_dir / self.run_id

    @property
    def checkpoints_root(self) -> Path:
        return self.output_dir / "checkpoints"

    @property
    def grid_text(self) -> Path:
        return self.output_dir / GRID_TEXT_FILE

    @property
    def grid_csv(self) -> Path:
        return self.output_dir / GRID_CSV_FILE


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


def read_manifest(artifact: Union[str, Path]) -> Dict[str, Any]:
    path = Path(artifact) / MANIFEST_FILE
    if not path.is_file():
        raise PipelineError(f"{artifact} is not a trained run (no {MANIFEST_FILE})")
    return read_json(path)


def head_backend(config: RunConfig) -> EncoderBackend:
    encoder = config.encoder
    return build_backend(encoder.id, path=str(encoder.path) if encoder.path else None, pooling=encoder.pooling,
                         dim=encoder.dim, seed=config.seed, max_length=encoder.max_length)


def check_compatible(manifest: Dict[str, Any], config: RunConfig, cleaned: bool,
                     backend: Optional[EncoderBackend] = None) -> None:
    """Artifacts are only ever used under the settings they were trained with"""
    if manifest["family"] != config.family:
        raise FingerprintMismatch("model family", manifest["family"], config.family)
    if manifest["cleaned"] != cleaned:
        raise FingerprintMismatch("cleaning", manifest["cleaned"], cleaned)
    if backend is not None:
        recorded = manifest.get("encoder") or {}
        current = backend.fingerprint()
        if recorded.get("dim") != current.get("dim"):
            raise FingerprintMismatch("encoder dimension", recorded.get("dim"), current.get("dim"))
        if recorded != current:
            raise FingerprintMismatch("encoder", recorded, current)


Predictor = Callable[[List[str]], List[Label]]


def load_predictor(artifact: Union[str, Path], config: RunConfig, cleaned: bool) -> Predictor:
    """Predictor over already-cleaned texts for the run stored at artifact"""
    artifact = Path(artifact)
    manifest = read_manifest(artifact)

    if manifest["family"] == "ensemble":
        from heads.classifier import load_head, predict_head, read_head_extra

        backend = head_backend(config)
        check_compatible(manifest, config, cleaned, backend)
        recorded = read_head_extra(artifact / HEAD_FILE).get("config_hash")
        if recorded != manifest["config_hash"]:
            raise FingerprintMismatch("head config_hash", recorded, manifest["config_hash"])
        head = load_head(artifact / HEAD_FILE)
        cache_dir = config.encoder.cache_dir

        def predict(texts: List[str]) -> List[Label]:
            return predict_head(head, encode_cached(list(texts), backend, cache_dir))
        return predict

    check_compatible(manifest, config, cleaned)
    if manifest["family"] == "rnn":
        from neural.lstm import load_lstm, predict_lstm

        trained = load_lstm(artifact / MODEL_DIR)
        return lambda texts: predict_lstm(trained, list(texts))

    from neural.finetune import load_finetuned, predict_finetuned

    trained = load_finetuned(artifact / MODEL_DIR)
    return lambda texts: predict_finetuned(trained, list(texts))


def manifest_labels(manifest: Dict[str, Any]) -> List[Label]:
    return [parse_label(value) for value in manifest["label_index"]]
