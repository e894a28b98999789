"""Uniform language model: every token (and EOS) equally likely."""

from __future__ import annotations

import math
from typing import List, Tuple

from .base import LanguageModel, LmCandidate
from ..vocab import Vocabulary


class UniformLm(LanguageModel):
    """Assigns probability 1/(|V|+1) to each real token and to EOS."""

    def __init__(self, vocabulary: Vocabulary):
        super().__init__(vocabulary)
        self._log_prob = -math.log(len(vocabulary.real_tokens) + 1)

    def _score_all(self, prefix: Tuple[int, ...]) -> List[LmCandidate]:
        return [
            LmCandidate(token.id, self._log_prob) for token in self.vocabulary.tokens
        ]
