import logging
import shutil
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

from neural.early_stopping import NeuralError

"""
Per-run checkpoint directory:

    {root}/{run_id}/epoch_{k}/   one directory per saved epoch
    {root}/{run_id}/best         "<epoch> <dev_metric>" on a single line
"""

logger = logging.getLogger(__name__)

BEST_MARKER = "best"


class CheckpointError(NeuralError):
    pass


class CheckpointStore:
    def __init__(self, root: Union[str, Path], run_id: str):
        if not run_id or "/" in run_id:
            raise CheckpointError(f"Invalid run id {run_id!r}")
        self.root = Path(root)
        self.run_id = run_id
        self.run_dir = self.root / run_id

    def epoch_dir(self, epoch: int) -> Path:
        return self.run_dir / f"epoch_{epoch}"

    def save_epoch(self, epoch: int, writer: Callable[[Path], None]) -> Path:
        """Hand a fresh epoch directory to writer; an existing one is replaced"""
        target = self.epoch_dir(epoch)
        if target.exists():
            shutil.rmtree(target)
        target.mkdir(parents=True)
        writer(target)
        return target

    def mark_best(self, epoch: int, metric: float) -> None:
        if not self.epoch_dir(epoch).is_dir():
            raise CheckpointError(f"Epoch {epoch} has no checkpoint in {self.run_dir}")
        (self.run_dir / BEST_MARKER).write_text(f"{epoch} {metric:.6f}\n", encoding="utf-8")
        logger.info(f"Best checkpoint for {self.run_id}: epoch {epoch} ({metric:.4f})")

    def read_best(self) -> Optional[Tuple[int, float]]:
        marker = self.run_dir / BEST_MARKER
        if not marker.is_file():
            return None
        fields = marker.read_text(encoding="utf-8").split()
        if len(fields) != 2:
            raise CheckpointError(f"Malformed best marker in {self.run_dir}")
        return int(fields[0]), float(fields[1])

    def best_dir(self) -> Path:
        best = self.read_best()
        if best is None:
            raise CheckpointError(f"No best marker in {self.run_dir}")
        return self.epoch_dir(best[0])

    def saved_epochs(self):
        if not self.run_dir.is_dir():
            return []
        epochs = [int(p.name.split("_", 1)[1]) for p in self.run_dir.glob("epoch_*") if p.is_dir()]
        return sorted(epochs)

    def reset(self) -> None:
        if self.run_dir.exists():
            shutil.rmtree(self.run_dir)
