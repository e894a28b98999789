"""Iterative LLM-guided beam decoder over CTC emissions.

Each iteration expands every live hypothesis with the language model's
top-K next tokens, force-aligns each candidate at the hypothesis's
current end frame, scores it as

    s' = s + log p_AM + alpha * log p_LM + beta

and keeps the best B hypotheses. A hypothesis finishes when (i) EOS
outranks every continuation, (ii) the best non-whitespace candidate's
per-frame alignment probability drops below the acoustic floor, or
(iii) its alignment has consumed the whole signal; a safety horizon
bounds the iteration count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .aligner import (
    DEFAULT_WINDOW,
    AlignerCache,
    AlignmentResult,
    CellCounter,
    align_incremental,
    align_token,
)
from .emissions import EmissionMatrix
from .errors import AlignmentError, ConfigError, DecodeFailure
from .lm.base import LanguageModel
from .vocab import Vocabulary

STOP_EOS = "eos_complete"
STOP_FLOOR = "acoustic_floor"
STOP_AUDIO = "audio_exhausted"
STOP_HORIZON = "horizon"


@dataclass(frozen=True)
class DecoderConfig:
    alpha: float = 0.0650
    beta: float = 0.0051
    beam_width: int = 5
    candidates_k: int = 5000
    max_iterations: Optional[int] = None  # None: ~10 tokens per second of audio
    acoustic_floor: float = 0.3
    lookahead_frames: int = DEFAULT_WINDOW
    eos_margin: float = 1.0

    def __post_init__(self):
        if self.beam_width < 1:
            raise ConfigError("beam_width must be >= 1")
        if self.candidates_k < 1:
            raise ConfigError("candidates_k must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if not (0.0 <= self.acoustic_floor <= 1.0):
            raise ConfigError("acoustic_floor must lie in [0, 1]")
        if self.lookahead_frames < 1:
            raise ConfigError("lookahead_frames must be >= 1")

    def horizon_for(self, emissions: EmissionMatrix) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return max(1, math.ceil(emissions.duration_ms / 100))


@dataclass(frozen=True)
class Hypothesis:
    """One beam entry; immutable, extensions create new hypotheses."""

    tokens: Tuple[int, ...] = ()
    alignments: Tuple[int, ...] = ()  # per-token start frames
    acoustic_score: float = 0.0
    lm_score: float = 0.0
    token_count: int = 0
    combined_score: float = 0.0
    end_frame: int = 0
    finished: bool = False
    stop_reason: Optional[str] = None

    @property
    def has_eos(self) -> bool:
        return len(self.tokens) == len(self.alignments) + 1


def step_score(prev: float, log_p_am: float, log_p_lm: float, config: DecoderConfig) -> float:
    """One scoring increment: prev + log p_AM + alpha * log p_LM + beta."""
    return prev + log_p_am + config.alpha * log_p_lm + config.beta


def beam_top_b(candidates: Sequence[Hypothesis], b: int) -> List[Hypothesis]:
    """B best hypotheses; ties break toward shorter, then lexicographic ids."""
    ranked = sorted(
        candidates, key=lambda h: (-h.combined_score, h.token_count, h.tokens)
    )
    return ranked[:b]


@dataclass
class DecodeResult:
    best: Hypothesis
    beam: List[Hypothesis]
    iterations: int
    stats: Dict[str, int] = field(default_factory=dict)


class LlmBeamDecoder:
    """Binds a language model, vocabulary, and configuration for decoding."""

    def __init__(
        self,
        lm: LanguageModel,
        vocabulary: Vocabulary,
        config: Optional[DecoderConfig] = None,
        use_cache: bool = True,
    ):
        self.lm = lm
        self.vocabulary = vocabulary
        self.config = config or DecoderConfig()
        self.use_cache = use_cache

    def decode(self, emissions: EmissionMatrix) -> DecodeResult:
        cfg = self.config
        counter = CellCounter()
        cache = AlignerCache()
        horizon = cfg.horizon_for(emissions)
        beam: List[Hypothesis] = [Hypothesis()]
        iterations = 0
        for n in range(1, horizon + 1):
            live = [h for h in beam if not h.finished]
            if not live:
                break
            iterations = n
            candidates: List[Hypothesis] = [h for h in beam if h.finished]
            for hyp in live:
                candidates.extend(
                    self._expand(hyp, emissions, cache, counter)
                )
            beam = beam_top_b(candidates, cfg.beam_width)
        else:
            # horizon reached: freeze whatever is still live
            beam = [
                replace(h, finished=True, stop_reason=STOP_HORIZON)
                if not h.finished
                else h
                for h in beam
            ]
        finished = [h for h in beam if h.finished]
        if not finished:
            raise DecodeFailure(
                "no finished hypothesis", best_partial=beam[0] if beam else None
            )
        best = beam_top_b(finished, 1)[0]
        return DecodeResult(
            best=best,
            beam=beam,
            iterations=iterations,
            stats={"alignment_cells": counter.cells, "cached_prefixes": len(cache)},
        )

    def text_of(self, hypothesis: Hypothesis) -> str:
        """Spell out a hypothesis, separators becoming spaces."""
        parts = []
        for token_id in hypothesis.tokens:
            token = self.vocabulary[token_id]
            if token.is_eos:
                continue
            parts.append((" " if token.word_initial else "") + token.text)
        return "".join(parts).strip()

    # -- internals ---------------------------------------------------------

    def _expand(
        self,
        hyp: Hypothesis,
        emissions: EmissionMatrix,
        cache: AlignerCache,
        counter: CellCounter,
    ) -> List[Hypothesis]:
        cfg = self.config
        candidates = self.lm.top_k(hyp.tokens, cfg.candidates_k)

        # (iii) audio exhaustion
        if hyp.end_frame >= emissions.num_frames:
            return [replace(hyp, finished=True, stop_reason=STOP_AUDIO)]

        # (i) completion assessment: EOS outranks every continuation
        eos_id = self.vocabulary.eos_id
        eos_lp = None
        best_cont_lp = None
        for cand in candidates:
            if cand.token_id == eos_id:
                eos_lp = cand.log_prob
            elif best_cont_lp is None or cand.log_prob > best_cont_lp:
                best_cont_lp = cand.log_prob
        if eos_lp is not None and best_cont_lp is not None:
            if cfg.eos_margin <= 0.0:
                return [self._finish_with_eos(hyp, eos_lp)]
            if eos_lp > math.log(cfg.eos_margin) + best_cont_lp:
                return [self._finish_with_eos(hyp, eos_lp)]
        if best_cont_lp is None:
            # nothing but EOS available
            return [self._finish_with_eos(hyp, eos_lp if eos_lp is not None else 0.0)]

        # (ii) acoustic floor, evaluated over the aligned candidates
        expanded: List[Hypothesis] = []
        best_gm = None
        kept_whitespace: List[Hypothesis] = []
        for cand in candidates:
            if cand.token_id == eos_id:
                continue
            token = self.vocabulary[cand.token_id]
            try:
                result = self._align(hyp, token, emissions, cache, counter)
            except AlignmentError:
                continue
            gm = math.exp(result.log_likelihood / result.frames_charged)
            new_hyp = self._extend(hyp, cand.token_id, cand.log_prob, result)
            if token.is_whitespace:
                kept_whitespace.append(new_hyp)
                continue
            if best_gm is None or gm > best_gm:
                best_gm = gm
            if gm >= cfg.acoustic_floor:
                expanded.append(new_hyp)
        if best_gm is None or best_gm < cfg.acoustic_floor:
            return [replace(hyp, finished=True, stop_reason=STOP_FLOOR)]
        return expanded + kept_whitespace

    def _align(
        self,
        hyp: Hypothesis,
        token,
        emissions: EmissionMatrix,
        cache: AlignerCache,
        counter: CellCounter,
    ) -> AlignmentResult:
        if self.use_cache:
            return align_incremental(
                cache,
                hyp.tokens,
                token.id,
                token.chars,
                emissions,
                window=self.config.lookahead_frames,
                counter=counter,
            )
        # cache disabled: re-align the whole prefix from frame 0
        start = 0
        for token_id in hyp.tokens:
            prev = self.vocabulary[token_id]
            res = align_token(
                prev.chars,
                start,
                emissions,
                window=self.config.lookahead_frames,
                counter=counter,
            )
            start = res.end_frame
        return align_token(
            token.chars,
            start,
            emissions,
            window=self.config.lookahead_frames,
            counter=counter,
        )

    def _extend(
        self, hyp: Hypothesis, token_id: int, log_p_lm: float, result: AlignmentResult
    ) -> Hypothesis:
        cfg = self.config
        acoustic = hyp.acoustic_score + result.log_likelihood
        lm_score = hyp.lm_score + log_p_lm
        count = hyp.token_count + 1
        return Hypothesis(
            tokens=hyp.tokens + (token_id,),
            alignments=hyp.alignments + (result.start_frame,),
            acoustic_score=acoustic,
            lm_score=lm_score,
            token_count=count,
            combined_score=acoustic + cfg.alpha * lm_score + cfg.beta * count,
            end_frame=result.end_frame,
        )

    def _finish_with_eos(self, hyp: Hypothesis, eos_lp: float) -> Hypothesis:
        cfg = self.config
        lm_score = hyp.lm_score + eos_lp
        return replace(
            hyp,
            tokens=hyp.tokens + (self.vocabulary.eos_id,),
            lm_score=lm_score,
            combined_score=hyp.acoustic_score
            + cfg.alpha * lm_score
            + cfg.beta * hyp.token_count,
            finished=True,
            stop_reason=STOP_EOS,
        )

    def should_stop(self, hyp: Hypothesis, emissions: EmissionMatrix):
        """Evaluate the stopping criteria for a live hypothesis.

        Returns the stop reason string, or None to continue. Alignment work
        here is duplicated with expansion; intended for inspection/tests.
        """
        probe = self._expand(hyp, emissions, AlignerCache(), CellCounter())
        if len(probe) == 1 and probe[0].finished:
            return probe[0].stop_reason
        return None

    def recursion_check(self, hyp: Hypothesis, emissions: EmissionMatrix, tol: float = 1e-9) -> float:
        """Replay a hypothesis's score from per-step increments.

        Re-aligns every token from frame 0 and re-scores the LM per prefix;
        raises AssertionError when the replayed total drifts beyond ``tol``.
        Returns the replayed combined score.
        """
        cfg = self.config
        total = 0.0
        acoustic = 0.0
        lm_score = 0.0
        start = 0
        count = 0
        for i, token_id in enumerate(hyp.tokens):
            token = self.vocabulary[token_id]
            log_p_lm = self._lm_log_prob(hyp.tokens[:i], token_id)
            if token.is_eos:
                lm_score += log_p_lm
                total += cfg.alpha * log_p_lm
                continue
            res = align_token(
                token.chars, start, emissions, window=cfg.lookahead_frames
            )
            start = res.end_frame
            acoustic += res.log_likelihood
            lm_score += log_p_lm
            count += 1
            total = step_score(total, res.log_likelihood, log_p_lm, cfg)
        if abs(total - hyp.combined_score) > tol:
            raise AssertionError(
                f"recursion check failed: replayed {total!r} vs stored "
                f"{hyp.combined_score!r}"
            )
        recomposed = acoustic + cfg.alpha * lm_score + cfg.beta * count
        if abs(recomposed - hyp.combined_score) > tol:
            raise AssertionError("score decomposition drifted from stored value")
        return total

    def _lm_log_prob(self, prefix: Tuple[int, ...], token_id: int) -> float:
        for cand in self.lm.top_k(prefix, len(self.vocabulary.tokens)):
            if cand.token_id == token_id:
                return cand.log_prob
        if token_id == self.vocabulary.eos_id:
            return self.lm.eos_log_prob(prefix)
        raise DecodeFailure(f"token {token_id} not scorable for prefix {prefix}")


def decode(
    emissions: EmissionMatrix,
    lm: LanguageModel,
    vocabulary: Vocabulary,
    config: Optional[DecoderConfig] = None,
    use_cache: bool = True,
) -> DecodeResult:
    """Convenience wrapper around :class:`LlmBeamDecoder`."""
    return LlmBeamDecoder(lm, vocabulary, config, use_cache=use_cache).decode(emissions)
