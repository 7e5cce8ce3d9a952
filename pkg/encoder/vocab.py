from collections import Counter
from dataclasses import dataclass
from typing import Dict, List

from config.settings import DEFAULT_MAX_LEN, DEFAULT_MAX_VOCAB
from corpus.dataset import Corpus, EmptyCorpus

PAD_ID = 0
UNK_ID = 1
FIRST_TOKEN_ID = 2


@dataclass(frozen=True)
class Vocab:
    """Word-level vocabulary; ids 0 and 1 are reserved for padding and unknown tokens"""
    token_to_id: Dict[str, int]
    max_size: int = DEFAULT_MAX_VOCAB

    def __len__(self) -> int:
        return len(self.token_to_id)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def to_dict(self) -> Dict[str, object]:
        return {"max_size": self.max_size, "tokens": sorted(self.token_to_id, key=self.token_to_id.get)}

    @classmethod
    def from_dict(cls, payload: Dict[str, object]) -> "Vocab":
        tokens = payload["tokens"]
        return cls({token: FIRST_TOKEN_ID + i for i, token in enumerate(tokens)}, int(payload["max_size"]))


def build_vocab(corpus: Corpus, max_size: int = DEFAULT_MAX_VOCAB) -> Vocab:
    """Keep the max_size most frequent whitespace tokens; ties go to the lexicographically smaller token"""
    if len(corpus) == 0:
        raise EmptyCorpus()
    if max_size < 1:
        raise ValueError(f"max_size must be positive, got {max_size}")
    frequencies = Counter(token for text in corpus.texts for token in text.split())
    ranked = sorted(frequencies, key=lambda token: (-frequencies[token], token))[:max_size]
    return Vocab({token: FIRST_TOKEN_ID + i for i, token in enumerate(ranked)}, max_size)


def tokenize_to_ids(text: str, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN) -> List[int]:
    """Token ids truncated to max_len and right-padded with PAD_ID"""
    ids = [vocab.lookup(token) for token in text.split()][:max_len]
    return ids + [PAD_ID] * (max_len - len(ids))
