"""Reference decoders: greedy CTC collapse, and CTC prefix beam search
with word-level N-gram fusion and a per-word insertion term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .emissions import EmissionMatrix
from .lm.ngram import NgramModel

NEG_INF = float("-inf")

# Flashlight-style defaults for the 4-gram comparison baseline.
DEFAULT_BEAM_WIDTH = 1500
DEFAULT_LM_WEIGHT = 2.0
DEFAULT_WORD_BONUS = -1.0


def _logsumexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    m = a if a > b else b
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def greedy_decode(emissions: EmissionMatrix) -> str:
    """Per-frame argmax, collapse repeats, drop blanks, separators to spaces."""
    alphabet = emissions.alphabet
    best = emissions.frames.argmax(axis=1)
    out: List[str] = []
    prev = -1
    for idx in best:
        idx = int(idx)
        if idx != prev and idx != alphabet.blank_index:
            out.append(" " if idx == alphabet.separator_index else alphabet.symbols[idx])
        prev = idx
    return " ".join("".join(out).split())


@dataclass
class PrefixBeamEntry:
    """Probability mass of one collapsed prefix, split by path ending."""

    p_blank: float = NEG_INF
    p_nonblank: float = NEG_INF
    lm_adjust: float = 0.0  # accumulated weighted LM + word-bonus terms

    @property
    def p_total(self) -> float:
        return _logsumexp(self.p_blank, self.p_nonblank)

    @property
    def score(self) -> float:
        return self.p_total + self.lm_adjust


def prefix_beam_decode(
    emissions: EmissionMatrix,
    ngram: Optional[NgramModel] = None,
    beam_width: int = DEFAULT_BEAM_WIDTH,
    lm_weight: float = DEFAULT_LM_WEIGHT,
    word_bonus: float = DEFAULT_WORD_BONUS,
    return_score: bool = False,
):
    """CTC prefix beam search with LM fusion at word boundaries.

    Each completed word w with left context adds
    lm_weight * log P(w | context) + word_bonus to the hypothesis score;
    the trailing word is scored the same way at finalization.
    """
    alphabet = emissions.alphabet
    blank = alphabet.blank_index
    sep = alphabet.separator_index

    def words_of(prefix: Tuple[int, ...]) -> List[str]:
        words, current = [], []
        for idx in prefix:
            if idx == sep:
                if current:
                    words.append("".join(current))
                current = []
            else:
                current.append(alphabet.symbols[idx])
        if current:
            words.append("".join(current))
        return words

    def word_score(context: List[str], word: str) -> float:
        if ngram is None or not word:
            return word_bonus if word else 0.0
        return lm_weight * ngram.score(context, word) + word_bonus

    beams: Dict[Tuple[int, ...], PrefixBeamEntry] = {
        (): PrefixBeamEntry(p_blank=0.0)
    }
    for t in range(emissions.num_frames):
        frame = emissions.frames[t]
        nxt: Dict[Tuple[int, ...], PrefixBeamEntry] = {}

        def entry(prefix: Tuple[int, ...], lm_adjust: float) -> PrefixBeamEntry:
            e = nxt.get(prefix)
            if e is None:
                e = PrefixBeamEntry(lm_adjust=lm_adjust)
                nxt[prefix] = e
            return e

        for prefix, cur in beams.items():
            last = prefix[-1] if prefix else None
            for c in range(emissions.num_symbols):
                p = float(frame[c])
                if c == blank:
                    e = entry(prefix, cur.lm_adjust)
                    e.p_blank = _logsumexp(e.p_blank, cur.p_total + p)
                elif c == last:
                    # repeat without blank extends the same prefix; with a
                    # preceding blank it starts a new occurrence
                    e = entry(prefix, cur.lm_adjust)
                    e.p_nonblank = _logsumexp(e.p_nonblank, cur.p_nonblank + p)
                    grown = prefix + (c,)
                    adjust = cur.lm_adjust
                    e2 = entry(grown, adjust)
                    e2.p_nonblank = _logsumexp(e2.p_nonblank, cur.p_blank + p)
                else:
                    grown = prefix + (c,)
                    adjust = cur.lm_adjust
                    if c == sep:
                        words = words_of(prefix)
                        if words:
                            adjust += word_score(words[:-1], words[-1])
                    e2 = entry(grown, adjust)
                    e2.p_nonblank = _logsumexp(e2.p_nonblank, cur.p_total + p)
        ranked = sorted(nxt.items(), key=lambda kv: -kv[1].score)
        beams = dict(ranked[:beam_width])

    best_prefix, best_score = None, NEG_INF
    for prefix, e in beams.items():
        score = e.score
        words = words_of(prefix)
        if words and (not prefix or prefix[-1] != sep):
            score += word_score(words[:-1], words[-1])
        if score > best_score:
            best_prefix, best_score = prefix, score
    text = " ".join(words_of(best_prefix or ()))
    if return_score:
        return text, best_score
    return text


def prefix_probabilities(
    emissions: EmissionMatrix, beam_width: int = 10**9
) -> Dict[Tuple[int, ...], float]:
    """Log P_CTC per collapsed labeling (no LM); full-width is exact."""
    result = {}
    alphabet = emissions.alphabet  # noqa: F841 - symmetry with decode
    beams: Dict[Tuple[int, ...], PrefixBeamEntry] = {(): PrefixBeamEntry(p_blank=0.0)}
    blank = emissions.alphabet.blank_index
    for t in range(emissions.num_frames):
        frame = emissions.frames[t]
        nxt: Dict[Tuple[int, ...], PrefixBeamEntry] = {}
        for prefix, cur in beams.items():
            last = prefix[-1] if prefix else None
            for c in range(emissions.num_symbols):
                p = float(frame[c])
                if c == blank:
                    e = nxt.setdefault(prefix, PrefixBeamEntry())
                    e.p_blank = _logsumexp(e.p_blank, cur.p_total + p)
                elif c == last:
                    e = nxt.setdefault(prefix, PrefixBeamEntry())
                    e.p_nonblank = _logsumexp(e.p_nonblank, cur.p_nonblank + p)
                    e2 = nxt.setdefault(prefix + (c,), PrefixBeamEntry())
                    e2.p_nonblank = _logsumexp(e2.p_nonblank, cur.p_blank + p)
                else:
                    e2 = nxt.setdefault(prefix + (c,), PrefixBeamEntry())
                    e2.p_nonblank = _logsumexp(e2.p_nonblank, cur.p_total + p)
        ranked = sorted(nxt.items(), key=lambda kv: -kv[1].p_total)
        beams = dict(ranked[:beam_width])
    for prefix, e in beams.items():
        if e.p_total != NEG_INF:
            result[prefix] = e.p_total
    return result
