import logging
from pathlib import Path
from typing import Dict, FrozenSet, Mapping, Optional, Union

from config.settings import RAW_TEXT_ENCODERS, resolve_encoder_id
from preprocess.cleaner import CleaningConfig, InvalidCleaningConfig

"""
Line-oriented cleaning resources: stopword lists and emoji maps.
The shipped files under data/ are small samples, not canonical lists.
"""

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_STOPWORDS_PATH = DATA_DIR / "stopwords.txt"
DEFAULT_EMOJI_MAP_PATH = DATA_DIR / "emoji_map.tsv"

# Model families of the pipeline and whether each trains on cleaned text by default
FAMILY_ENSEMBLE = "ensemble"
FAMILY_RNN = "rnn"
FAMILY_TRANSFORMER = "transformer"
DEFAULT_CLEANING = {
    FAMILY_ENSEMBLE: False,
    FAMILY_RNN: True,
    FAMILY_TRANSFORMER: True,
}


def _content_lines(path: Path):
    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield line_number, line


def load_stopwords(path: Union[str, Path] = DEFAULT_STOPWORDS_PATH) -> FrozenSet[str]:
    """One stopword per line; '#' lines are comments"""
    words = frozenset(line.strip() for _, line in _content_lines(Path(path)))
    logger.debug(f"Loaded {len(words)} stopwords from {path}")
    return words


def load_emoji_map(path: Union[str, Path] = DEFAULT_EMOJI_MAP_PATH) -> Dict[str, str]:
    """emoji<TAB>token per line; '#' lines are comments"""
    mapping = {}
    for line_number, line in _content_lines(Path(path)):
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1].strip():
            raise InvalidCleaningConfig(f"{path}:{line_number}: expected emoji<TAB>token")
        mapping[fields[0]] = fields[1].strip()
    logger.debug(f"Loaded {len(mapping)} emoji replacements from {path}")
    return mapping


def default_cleaning_config(stopwords_path: Optional[Union[str, Path]] = None,
                            emoji_map_path: Optional[Union[str, Path]] = None,
                            **flags) -> CleaningConfig:
    """All four stages on, backed by the shipped (or given) resource files"""
    return CleaningConfig(
        stopwords=load_stopwords(stopwords_path or DEFAULT_STOPWORDS_PATH),
        emoji_map=load_emoji_map(emoji_map_path or DEFAULT_EMOJI_MAP_PATH),
        **flags,
    )


def cleaning_enabled(family: str, encoder_id: Optional[str] = None,
                     overrides: Optional[Mapping[str, bool]] = None) -> bool:
    """
    Whether a model family trains on cleaned text.

    Defaults: cleaned for RNN and transformer models, raw for ensemble models
    and for MuRIL. An explicit per-family override always wins.
    """
    if overrides and family in overrides and overrides[family] is not None:
        return bool(overrides[family])
    if family == FAMILY_TRANSFORMER and encoder_id:
        resolved = resolve_encoder_id(encoder_id)
        # local checkpoint directories are recognised by name
        if resolved in RAW_TEXT_ENCODERS or "muril" in Path(resolved).name.lower():
            return False
    return DEFAULT_CLEANING[family]
