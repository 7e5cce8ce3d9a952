import logging
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional

import emoji

from corpus.dataset import Corpus, Example
from utils.errors import PipelineError

"""
Text cleaning pipeline.
Stages run in a fixed order: emoji replacement, URL stripping, punctuation
stripping, stopword removal. Emoji tokens are inserted before punctuation is
stripped, so tokens are restricted to word characters and survive.
"""

logger = logging.getLogger(__name__)

URL_PATTERN = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)

# Pieces of multi-codepoint emoji: regional indicators, skin tones, ZWJ,
# variation selector 16, combining keycap, tag characters
EMOJI_COMPONENTS = re.compile("[\U0001F1E6-\U0001F1FF\U0001F3FB-\U0001F3FF\u200d\ufe0f\u20e3\U000E0020-\U000E007F]")


class InvalidCleaningConfig(PipelineError):
    """Cleaning configuration violates its invariants"""


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _is_emoji_free(token: str) -> bool:
    return not emoji.emoji_list(token) and not EMOJI_COMPONENTS.search(token)


def _is_word_token(token: str) -> bool:
    """Replacement tokens may only hold characters the punctuation stage keeps"""
    if not token or any(ch.isspace() for ch in token):
        return False
    return all(not unicodedata.category(ch).startswith("P") or unicodedata.category(ch) == "Pc" for ch in token)


@dataclass(frozen=True)
class CleaningConfig:
    strip_urls: bool = True
    strip_punctuation: bool = True
    remove_stopwords: bool = True
    replace_emojis: bool = True
    stopwords: FrozenSet[str] = field(default_factory=frozenset)
    emoji_map: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "stopwords", frozenset(word.casefold() for word in self.stopwords))
        object.__setattr__(self, "emoji_map", dict(self.emoji_map))
        self.validate()

    def validate(self) -> None:
        if self.remove_stopwords and not self.stopwords:
            raise InvalidCleaningConfig("remove_stopwords is set but the stopword set is empty")
        if self.replace_emojis:
            if not self.emoji_map:
                raise InvalidCleaningConfig("replace_emojis is set but the emoji map is empty")
            for source, token in self.emoji_map.items():
                if not source:
                    raise InvalidCleaningConfig("emoji map contains an empty key")
                if not emoji.emoji_list(source):
                    raise InvalidCleaningConfig(f"emoji map key {source!r} is not an emoji")
                if not _is_emoji_free(token):
                    raise InvalidCleaningConfig(f"replacement for {source!r} contains emoji: {token!r}")
                if not _is_word_token(token):
                    raise InvalidCleaningConfig(f"replacement for {source!r} must be a single word token: {token!r}")

    @classmethod
    def disabled(cls) -> "CleaningConfig":
        return cls(strip_urls=False, strip_punctuation=False, remove_stopwords=False, replace_emojis=False)


def strip_urls(text: str) -> str:
    """Delete http(s):// and www. URLs up to the next whitespace"""
    return normalize_whitespace(URL_PATTERN.sub(" ", text))


def _emoji_pattern(emoji_map: Mapping[str, str]) -> Optional["re.Pattern[str]"]:
    if not emoji_map:
        return None
    # longest sequence first so overlapping keys resolve to the longest match
    keys = sorted(emoji_map, key=lambda key: (-len(key), key))
    return re.compile("|".join(re.escape(key) for key in keys))


def replace_emojis(text: str, emoji_map: Mapping[str, str]) -> str:
    """Swap mapped emoji for their padded tokens and drop every other emoji"""
    pattern = _emoji_pattern(emoji_map)
    if pattern is not None:
        text = pattern.sub(lambda match: f" {emoji_map[match.group(0)]} ", text)
    text = emoji.replace_emoji(text, replace=" ")
    text = EMOJI_COMPONENTS.sub(" ", text)
    return normalize_whitespace(text)


def _punctuation_replacement(ch: str) -> str:
    category = unicodedata.category(ch)
    if not category.startswith("P") or category == "Pc":
        return ch
    if category == "Pd":
        return ""
    return " "


def strip_punctuation(text: str) -> str:
    """
    Remove Unicode punctuation. Dashes join their neighbours ("a--b" -> "ab"),
    connectors such as "_" count as word characters, everything else in the
    P* categories separates words.
    """
    return normalize_whitespace("".join(_punctuation_replacement(ch) for ch in text))


def remove_stopwords(text: str, stopwords) -> str:
    """Drop whitespace-delimited tokens that match a stopword after case-folding"""
    folded = {word.casefold() for word in stopwords}
    return " ".join(token for token in text.split() if token.casefold() not in folded)


def clean(text: str, config: CleaningConfig) -> str:
    """Apply the enabled stages in their fixed order"""
    if config.replace_emojis:
        text = replace_emojis(text, config.emoji_map)
    if config.strip_urls:
        text = strip_urls(text)
    if config.strip_punctuation:
        text = strip_punctuation(text)
    if config.remove_stopwords:
        text = remove_stopwords(text, config.stopwords)
    return normalize_whitespace(text)


def clean_texts(texts: List[str], config: CleaningConfig) -> List[str]:
    """
    Clean every text. A comment that cleans down to nothing keeps its
    whitespace-normalized raw text so it stays non-empty.
    """
    cleaned = []
    emptied = 0
    for raw in texts:
        text = clean(raw, config)
        if not text:
            emptied += 1
            text = normalize_whitespace(raw)
        cleaned.append(text)
    if emptied:
        logger.warning(f"{emptied} comments were empty after cleaning and kept their raw text")
    return cleaned


def clean_corpus(corpus: Corpus, config: CleaningConfig) -> Corpus:
    texts = clean_texts(corpus.texts, config)
    return corpus.replace_examples(
        Example(text=text, label=example.label, id=example.id) for text, example in zip(texts, corpus)
    )
