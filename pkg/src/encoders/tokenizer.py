import re
from typing import Iterable

PAD = 0
UNK = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

TOKEN_PATTERN = re.compile(r"[^\W_]+")


def split_tokens(text: str) -> list[str]:
    """Lowercase and split on whitespace and punctuation boundaries."""
    return TOKEN_PATTERN.findall(text.lower())


class TokenVocab:
    def __init__(self, tokens: Iterable[str] = ()):
        self._ids: dict[str, int] = {PAD_TOKEN: PAD, UNK_TOKEN: UNK}
        self._tokens: list[str] = [PAD_TOKEN, UNK_TOKEN]
        for token in tokens:
            self.add(token)

    @classmethod
    def build(cls, texts: Iterable[str]) -> "TokenVocab":
        vocab = cls()
        for text in texts:
            for token in split_tokens(text):
                vocab.add(token)
        return vocab

    def add(self, token: str) -> int:
        if token not in self._ids:
            self._ids[token] = len(self._tokens)
            self._tokens.append(token)
        return self._ids[token]

    def id(self, token: str) -> int:
        return self._ids.get(token, UNK)

    def tokenize(self, text: str) -> list[int]:
        ids = [self.id(token) for token in split_tokens(text)]
        return ids or [UNK]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids


def tokenize(text: str, vocab: TokenVocab) -> list[int]:
    return vocab.tokenize(text)
