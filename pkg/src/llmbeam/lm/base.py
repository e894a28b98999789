"""Language-model interface: top-K next-token candidates for a prefix."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Tuple

from ..vocab import Vocabulary


@dataclass(frozen=True)
class LmCandidate:
    token_id: int
    log_prob: float  # natural log


class LanguageModel(ABC):
    """Top-K candidate provider over a bound vocabulary.

    Implementations memoize per-prefix results (identical beam prefixes
    recur constantly); call :meth:`clear_cache` between utterances if the
    backing model is mutable or remote.
    """

    def __init__(self, vocabulary: Vocabulary):
        self.vocabulary = vocabulary
        self._cache = {}

    def top_k(self, prefix: Tuple[int, ...], k: int) -> List[LmCandidate]:
        """K best next tokens, sorted by descending log-prob then token id.

        Includes EOS when it ranks within the top k.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        key = (tuple(prefix), k)
        cached = self._cache.get(key)
        if cached is None:
            ranked = sorted(
                self._score_all(tuple(prefix)), key=lambda c: (-c.log_prob, c.token_id)
            )
            cached = ranked[:k]
            self._cache[key] = cached
        return list(cached)

    def eos_log_prob(self, prefix: Tuple[int, ...]) -> float:
        """log P(EOS | prefix), regardless of its top-k rank."""
        eos_id = self.vocabulary.eos_id
        for cand in self._score_all(tuple(prefix)):
            if cand.token_id == eos_id:
                return cand.log_prob
        return float("-inf")

    def clear_cache(self) -> None:
        self._cache.clear()

    @abstractmethod
    def _score_all(self, prefix: Tuple[int, ...]) -> List[LmCandidate]:
        """Candidates for every scorable token (including EOS), any order."""
