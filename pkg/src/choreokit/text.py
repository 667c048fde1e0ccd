"""Controlled-vocabulary text conditioning.

Prompts are lowercased, stripped of punctuation and split on whitespace; the
conditioning vector is the mean of the embedding rows of the tokens, with a
reserved row for anything outside the vocabulary. The table is trainable in
the pretraining stage and frozen during fine-tuning.
"""

from __future__ import annotations

import dataclasses
import string

import numpy as np

_STRIP = str.maketrans("", "", string.punctuation)


def tokenize(prompt: str) -> list[str]:
    return prompt.lower().translate(_STRIP).split()


@dataclasses.dataclass(frozen=True)
class TextEncoder:
    vocabulary: tuple          # ordered token list, OOV excluded
    embedding_table: np.ndarray  # (len(vocabulary) + 1, E); last row is the OOV slot

    def __post_init__(self):
        table = np.asarray(self.embedding_table, dtype=np.float64)
        if table.shape[0] != len(self.vocabulary) + 1:
            raise ValueError("embedding table must have one row per token plus the OOV row")
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        object.__setattr__(self, "embedding_table", table)
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(self.vocabulary)})

    @property
    def oov_index(self) -> int:
        return len(self.vocabulary)

    @property
    def dim(self) -> int:
        return self.embedding_table.shape[1]

    def token_indices(self, prompt: str) -> list[int]:
        tokens = tokenize(prompt)
        if not tokens:
            raise ValueError("prompt must contain at least one token")
        return [self._index.get(tok, self.oov_index) for tok in tokens]

    def encode(self, prompt: str) -> np.ndarray:
        """Mean of the token embedding rows; deterministic per prompt."""
        idx = self.token_indices(prompt)
        return self.embedding_table[idx].mean(axis=0)

    def with_table(self, table: np.ndarray) -> "TextEncoder":
        return TextEncoder(vocabulary=self.vocabulary, embedding_table=table)


def encode_text(encoder: TextEncoder, prompt: str) -> np.ndarray:
    return encoder.encode(prompt)
