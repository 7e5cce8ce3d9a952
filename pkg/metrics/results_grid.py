from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import pandas as pd

from metrics.evaluation import EvalReport

"""
Results grids: one row per model, grouped by model family, with a
"macro | weighted" cell per dataset.
"""

FAMILY_TITLES = {
    "ensemble": "Ensemble Models",
    "rnn": "RNN Models",
    "transformer": "Transformer Models",
}
DATASET_TITLES = {
    "tamil": "Tamil",
    "codemix": "Codemix",
    "combined": "Combined",
    "synthetic": "Synthetic",
}
# Tamil and Codemix columns are always present
BASE_DATASETS = ["tamil", "codemix"]
COLUMN_GAP = "  "
SUBHEADER = "macro | weighted"
MISSING = "-"
FAMILY_WIDTH = len("Transformer Models")
MODEL_WIDTH = 20


@dataclass(frozen=True)
class ResultsGrid:
    text: str
    rows: pd.DataFrame

    def to_csv(self) -> str:
        return self.rows.to_csv(index=False, float_format="%.2f", lineterminator="\n")

    def write(self, text_path: Union[str, Path], csv_path: Union[str, Path]) -> None:
        Path(text_path).write_text(self.text, encoding="utf-8")
        Path(csv_path).write_text(self.to_csv(), encoding="utf-8")


def _family_order(family: str) -> Tuple[int, str]:
    families = list(FAMILY_TITLES)
    return (families.index(family), family) if family in families else (len(families), family)


def _datasets(reports: Sequence[EvalReport]) -> List[str]:
    extra = sorted({r.run_meta.dataset for r in reports} - set(BASE_DATASETS))
    return BASE_DATASETS + extra


def _cell(result: EvalReport) -> str:
    return f"{result.macro_f1:.2f} | {result.weighted_f1:.2f}"


def results_grid(reports: Sequence[EvalReport]) -> ResultsGrid:
    """
    Render reports as aligned text and as machine-readable rows.
    The latest report wins when a (model, dataset) pair repeats.
    """
    datasets = _datasets(reports)

    # (family, model) -> dataset -> report, in first-appearance order
    table: Dict[Tuple[str, str], Dict[str, EvalReport]] = {}
    for result in reports:
        key = (result.run_meta.family, result.run_meta.model)
        table.setdefault(key, {})[result.run_meta.dataset] = result
    ordered = sorted(table, key=lambda key: _family_order(key[0]))

    width = max([len(SUBHEADER)] + [len(DATASET_TITLES.get(d, d)) for d in datasets])
    model_width = max([MODEL_WIDTH] + [len(model) + 2 for _, model in ordered])

    def line(family: str, model: str, cells: List[str]) -> str:
        parts = [family.ljust(FAMILY_WIDTH), model.ljust(model_width)] + [cell.ljust(width) for cell in cells]
        return COLUMN_GAP.join(parts).rstrip()

    lines = [
        line("Model Type", "Classifier", [DATASET_TITLES.get(d, d) for d in datasets]),
        line("", "", [SUBHEADER] * len(datasets)),
    ]
    records = []
    previous_family = None
    for family, model in ordered:
        cells = []
        for dataset in datasets:
            result = table[(family, model)].get(dataset)
            cells.append(_cell(result) if result else MISSING)
            if result:
                records.append({
                    "family": family,
                    "model": model,
                    "dataset": dataset,
                    "macro_f1": round(result.macro_f1, 2),
                    "weighted_f1": round(result.weighted_f1, 2),
                })
        title = FAMILY_TITLES.get(family, family) if family != previous_family else ""
        lines.append(line(title, model, cells))
        previous_family = family

    rows = pd.DataFrame(records, columns=["family", "model", "dataset", "macro_f1", "weighted_f1"])
    return ResultsGrid(text="\n".join(lines) + "\n", rows=rows)
