import re
from enum import Enum
from typing import Dict, List, Optional

"""
Label taxonomy of the abusive-comment shared task.
Nine labels exist; Not-Tamil never appears in dev/test data, so evaluation and
training run over the eight active labels.
"""


class Label(str, Enum):
    HOPE_SPEECH = "Hope-Speech"
    HOMOPHOBIA = "Homophobia"
    MISANDRY = "Misandry"
    COUNTER_SPEECH = "Counter-speech"
    MISOGYNY = "Misogyny"
    XENOPHOBIA = "Xenophobia"
    TRANSPHOBIC = "Transphobic"
    NOT_TAMIL = "Not-Tamil"
    NONE_OF_THE_ABOVE = "None-of-the-above"

    def __str__(self) -> str:
        return self.value

    @property
    def order(self) -> int:
        """Position in the taxonomy; used for every deterministic tie-break"""
        return TAXONOMY.index(self)


TAXONOMY: List[Label] = list(Label)
ACTIVE_LABELS: List[Label] = [label for label in TAXONOMY if label is not Label.NOT_TAMIL]


def _key(token: str) -> str:
    # case-insensitive, space / hyphen / underscore are interchangeable
    return re.sub(r"[\s_\-]+", "", token.strip().lower())


_LOOKUP: Dict[str, Label] = {_key(label.value): label for label in TAXONOMY}
# Table 1 spells the catch-all class "None-of-these"
_LOOKUP[_key("None-of-these")] = Label.NONE_OF_THE_ABOVE


def try_parse_label(token: str) -> Optional[Label]:
    """Parse a label string, returning None when it is not part of the taxonomy"""
    return _LOOKUP.get(_key(token))


def parse_label(token: str) -> Label:
    """Parse a label string; raises ValueError for unknown tokens"""
    label = try_parse_label(token)
    if label is None:
        raise ValueError(f"Unknown label: {token!r}")
    return label


def render_label(label: Label) -> str:
    return label.value


def sort_labels(labels) -> List[Label]:
    """Deduplicate and order labels by taxonomy position"""
    return sorted(set(labels), key=lambda label: label.order)
