import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from config.settings import CLASS_DISTRIBUTIONS
from corpus.labels import ACTIVE_LABELS, TAXONOMY, Label, parse_label, try_parse_label
from utils.errors import PipelineError

"""
Labeled comment corpora.
Loads and writes the shared task's flat `text<TAB>label` TSV files and
describes their class distribution.
"""

logger = logging.getLogger(__name__)


class CorpusError(PipelineError):
    """Base class for corpus loading and validation errors"""


class MissingFile(CorpusError):
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        super().__init__(f"File not found: {self.path}")


class MalformedRow(CorpusError):
    def __init__(self, line: int, reason: str = "expected text<TAB>label"):
        self.line = line
        self.reason = reason
        super().__init__(f"Malformed row at line {line}: {reason}")


class UnknownLabel(CorpusError):
    def __init__(self, line: int, token: str):
        self.line = line
        self.token = token
        super().__init__(f"Unknown label {token!r} at line {line}")


class EmptyCorpus(CorpusError):
    def __init__(self, what: str = "corpus"):
        super().__init__(f"Empty {what}")


class Split(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class LanguageTag(str, Enum):
    TAMIL = "tamil"
    CODEMIX = "codemix"
    SYNTHETIC = "synthetic"
    COMBINED = "combined"


@dataclass(frozen=True)
class Example:
    text: str
    label: Label
    id: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"Example {self.id} has empty text")


@dataclass
class LoadDiagnostics:
    """What the loader tolerated while reading a file"""
    header_skipped: bool = False
    header_line: Optional[str] = None
    extra_column_rows: int = 0
    blank_lines: int = 0


@dataclass(frozen=True)
class Corpus:
    examples: Tuple[Example, ...]
    split: Split
    language_tag: LanguageTag
    diagnostics: Optional[LoadDiagnostics] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "split", Split(self.split))
        object.__setattr__(self, "language_tag", LanguageTag(self.language_tag))

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    @property
    def texts(self) -> List[str]:
        return [example.text for example in self.examples]

    @property
    def labels(self) -> List[Label]:
        return [example.label for example in self.examples]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, Label]], split: Split = Split.TRAIN,
                   language_tag: LanguageTag = LanguageTag.SYNTHETIC) -> "Corpus":
        """Build a corpus with dense ids from (text, label) pairs"""
        examples = [Example(text=text, label=label, id=i) for i, (text, label) in enumerate(pairs)]
        return cls(examples=tuple(examples), split=split, language_tag=language_tag)

    def replace_examples(self, examples: Iterable[Example]) -> "Corpus":
        return Corpus(examples=tuple(examples), split=self.split, language_tag=self.language_tag)


@dataclass(frozen=True)
class DistributionStats:
    counts: Dict[Label, int]
    fractions: Dict[Label, float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def nonzero(self) -> Dict[Label, int]:
        return {label: count for label, count in self.counts.items() if count > 0}


def load_tsv(path: Union[str, Path], split: Union[Split, str], language_tag: Union[LanguageTag, str]) -> Corpus:
    """
    Load a `text<TAB>label` file.

    Blank lines are skipped. Columns after the label are ignored and counted.
    A first row whose label does not parse is taken as a header and reported
    in the diagnostics rather than rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)

    diagnostics = LoadDiagnostics()
    examples: List[Example] = []

    with path.open("r", encoding="utf-8", newline="") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                diagnostics.blank_lines += 1
                continue

            fields = line.split("\t")
            if len(fields) < 2:
                raise MalformedRow(line_number)
            if len(fields) > 2:
                diagnostics.extra_column_rows += 1

            text, token = fields[0], fields[1]
            label = try_parse_label(token)
            if label is None:
                if not examples and not diagnostics.header_skipped:
                    diagnostics.header_skipped = True
                    diagnostics.header_line = line
                    logger.warning(f"{path}: treating line {line_number} as a header (label field {token!r} does not parse)")
                    continue
                raise UnknownLabel(line_number, token)

            if not text.strip():
                raise MalformedRow(line_number, "empty comment text")
            examples.append(Example(text=text, label=label, id=len(examples)))

    if diagnostics.extra_column_rows:
        logger.warning(f"{path}: ignored extra columns on {diagnostics.extra_column_rows} rows")
    logger.info(f"Loaded {len(examples)} examples from {path} ({split}, {language_tag})")

    return Corpus(examples=tuple(examples), split=Split(split), language_tag=LanguageTag(language_tag),
                  diagnostics=diagnostics)


def write_tsv(corpus: Corpus, path: Union[str, Path]) -> Path:
    """Write a corpus in the same format load_tsv reads"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for example in corpus:
            handle.write(f"{example.text}\t{example.label.value}\n")
    return path


def label_distribution(corpus: Corpus) -> DistributionStats:
    """Per-label counts and fractions over the full nine-label taxonomy"""
    if len(corpus) == 0:
        raise EmptyCorpus()
    counts = {label: 0 for label in TAXONOMY}
    for example in corpus:
        counts[example.label] += 1
    total = len(corpus)
    fractions = {label: count / total for label, count in counts.items()}
    return DistributionStats(counts=counts, fractions=fractions)


def filter_active(corpus: Corpus) -> Corpus:
    """Drop Not-Tamil rows; ids are kept so rows stay traceable to the source file"""
    kept = [example for example in corpus if example.label is not Label.NOT_TAMIL]
    dropped = len(corpus) - len(kept)
    if dropped:
        logger.info(f"Excluded {dropped} Not-Tamil rows from {corpus.split.value} split")
    return corpus.replace_examples(kept)


def combine_corpora(corpora: List[Corpus]) -> Corpus:
    """Concatenate corpora of the same split into one combined-language corpus"""
    if not corpora:
        raise EmptyCorpus("list of corpora")
    splits = {corpus.split for corpus in corpora}
    if len(splits) != 1:
        raise CorpusError(f"Cannot combine corpora from different splits: {sorted(s.value for s in splits)}")
    pairs = [(example.text, example.label) for corpus in corpora for example in corpus]
    return Corpus.from_pairs(pairs, split=corpora[0].split, language_tag=LanguageTag.COMBINED)


def reference_distribution(dataset_tag: str) -> Dict[Label, float]:
    """Published class fractions for a dataset, renormalized over the active labels"""
    try:
        published = CLASS_DISTRIBUTIONS[dataset_tag]
    except KeyError:
        raise CorpusError(f"No published distribution for dataset {dataset_tag!r}") from None
    fractions = {parse_label(name): value for name, value in published.items()}
    total = sum(fractions[label] for label in ACTIVE_LABELS)
    return {label: fractions[label] / total for label in ACTIVE_LABELS}
