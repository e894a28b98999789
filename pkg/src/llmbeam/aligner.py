"""Viterbi forced alignment of token characters onto CTC emissions.

The state topology for chars c1..cn is the blank-augmented chain
[eps, c1, eps, c2, ..., eps, cn]: leading/inter-char blanks optional,
blank mandatory between repeated characters, and the path must end in the
final character (trailing silence belongs to the next token's leading
blank). Alignment of token n starts one frame before the previous token's
end frame; that overlap frame is scored at zero cost here because the
previous token already paid for it, which keeps the cumulative acoustic
score an exact sum of per-token log-likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .emissions import EmissionMatrix
from .errors import AlignmentError

#: Default lookahead: 75 frames = 1500 ms at 20 ms/frame.
DEFAULT_WINDOW = 75

# Large negative sentinel instead of -inf so no NaN can enter the trellis.
NEG_INF = -1.0e30
_INFEASIBLE = -1.0e29


@dataclass(frozen=True)
class AlignmentResult:
    """Best-path alignment of one token's characters."""

    start_frame: int  # first frame emitting the first character
    end_frame: int  # exclusive; frame after the last character's emission
    log_likelihood: float  # path score, overlap frame counted exactly once
    char_spans: Tuple[Tuple[int, int], ...]  # per character, [start, end)

    @property
    def frames_charged(self) -> int:
        """Frames whose scores this token contributed (excludes the overlap)."""
        return max(self.end_frame - self.start_frame, 1)


class CellCounter:
    """Counts trellis cell evaluations, for complexity instrumentation."""

    def __init__(self):
        self.cells = 0


def _expand_states(chars: Sequence[int], blank: int) -> List[int]:
    states: List[int] = []
    for c in chars:
        states.append(blank)
        states.append(c)
    return states


def viterbi_trellis(
    chars: Sequence[int],
    emissions_slice: np.ndarray,
    blank_index: int,
    first_frame_free: bool = False,
    counter: Optional[CellCounter] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Max-product trellis over the blank-augmented state chain.

    Returns (scores, backpointers), both (frames x states). scores[t, s] is
    the best log-probability of a path consuming frames <= t and sitting in
    state s at frame t. Infeasible cells carry the NEG_INF sentinel.
    With ``first_frame_free`` the first frame contributes no emission score
    (the one-frame overlap with the previous token's alignment).
    """
    if emissions_slice.shape[0] == 0:
        raise AlignmentError("empty emissions slice")
    states = _expand_states(chars, blank_index)
    n_frames = emissions_slice.shape[0]
    n_states = len(states)
    scores = np.full((n_frames, n_states), NEG_INF, dtype=np.float64)
    bptr = np.full((n_frames, n_states), -1, dtype=np.int32)

    em = emissions_slice.astype(np.float64, copy=False)
    state_ids = np.asarray(states)

    # Skipping the blank is legal only into a character state whose
    # character differs from the one two states back.
    skip_ok = np.zeros(n_states, dtype=bool)
    for s in range(2, n_states):
        skip_ok[s] = s % 2 == 1 and states[s] != states[s - 2]

    # Entry states: leading blank or the first character.
    first_emit = np.zeros(n_states) if first_frame_free else em[0, state_ids]
    scores[0, 0] = first_emit[0]
    if n_states > 1:
        scores[0, 1] = first_emit[1]

    for t in range(1, n_frames):
        prev_row = scores[t - 1]
        emit_row = em[t, state_ids]
        # Predecessors considered in order (s-2, s-1, s); ties keep the
        # earliest, so the smallest predecessor state wins.
        best = np.full(n_states, NEG_INF)
        best_prev = np.full(n_states, -1, dtype=np.int32)
        from_skip = np.full(n_states, NEG_INF)
        from_skip[2:] = prev_row[:-2]
        from_skip[~skip_ok] = NEG_INF
        take = from_skip > _INFEASIBLE
        best[take] = from_skip[take]
        best_prev[take] = np.arange(n_states, dtype=np.int32)[take] - 2
        from_prev = np.full(n_states, NEG_INF)
        from_prev[1:] = prev_row[:-1]
        take = (from_prev > _INFEASIBLE) & (from_prev > best)
        best[take] = from_prev[take]
        best_prev[take] = np.arange(n_states, dtype=np.int32)[take] - 1
        take = (prev_row > _INFEASIBLE) & (prev_row > best)
        best[take] = prev_row[take]
        best_prev[take] = np.arange(n_states, dtype=np.int32)[take]
        reachable = best_prev >= 0
        scores[t, reachable] = best[reachable] + emit_row[reachable]
        bptr[t] = best_prev
        if counter is not None:
            counter.cells += n_states
    if counter is not None:
        counter.cells += n_states  # first column
    return scores, bptr


def align_token(
    chars: Sequence[int],
    start_frame: int,
    emissions: EmissionMatrix,
    window: int = DEFAULT_WINDOW,
    counter: Optional[CellCounter] = None,
) -> AlignmentResult:
    """Align one token's characters starting near ``start_frame``.

    Searches frames [max(0, start_frame - 1), min(T, start_frame + window)).
    Ties between equal-score end frames resolve to the earliest end.
    Raises AlignmentError when no feasible path exists in the window.
    """
    if not chars:
        raise AlignmentError("cannot align an empty character sequence")
    t_total = emissions.num_frames
    if start_frame >= t_total:
        raise AlignmentError(
            f"start_frame {start_frame} is beyond the {t_total}-frame signal"
        )
    overlap = start_frame > 0
    lo = start_frame - 1 if overlap else 0
    hi = min(t_total, start_frame + window)
    if hi <= lo:
        raise AlignmentError("empty alignment window")

    blank = emissions.alphabet.blank_index
    scores, bptr = viterbi_trellis(
        chars, emissions.frames[lo:hi], blank, first_frame_free=overlap, counter=counter
    )
    last_state = 2 * len(chars) - 1
    col = scores[:, last_state]
    feasible = col > _INFEASIBLE
    if overlap:
        # The token must consume at least one frame beyond the overlap;
        # otherwise a zero-cost alignment inside the pre-paid frame would
        # let the beam append tokens without advancing through the signal.
        feasible[0] = False
    if not np.any(feasible):
        raise AlignmentError(
            f"no feasible CTC path for {len(chars)} chars in frames [{lo}, {hi})"
        )
    # argmax end frame; ties resolve to the earliest (fewest frames consumed)
    best_score = float(col[feasible].max())
    end_t = int(np.nonzero(feasible & (col >= best_score))[0][0])

    # Backtrace to recover per-state occupancy.
    path_states = [last_state]
    t = end_t
    while t > 0:
        prev = int(bptr[t, path_states[-1]])
        path_states.append(prev)
        t -= 1
    path_states.reverse()  # path_states[t] = state occupied at frame lo + t

    # First character frame defines the token start time.
    first_char_t = next(i for i, s in enumerate(path_states) if s % 2 == 1)
    # Each character's span runs from its first frame to the next character's
    # first frame (inter-char blanks attach to the preceding character).
    char_starts: List[int] = []
    prev_state = -1
    for i, s in enumerate(path_states):
        if s % 2 == 1 and s != prev_state:
            char_starts.append(i)
        prev_state = s
    spans = []
    for k, cs in enumerate(char_starts):
        ce = char_starts[k + 1] if k + 1 < len(char_starts) else end_t + 1
        spans.append((lo + cs, lo + ce))
    if len(spans) != len(chars):
        raise AlignmentError("internal error: span count mismatch")

    return AlignmentResult(
        start_frame=lo + first_char_t,
        end_frame=lo + end_t + 1,
        log_likelihood=best_score,
        char_spans=tuple(spans),
    )


@dataclass
class CacheEntry:
    end_frame: int
    cumulative_log_likelihood: float
    final_column: Optional[np.ndarray] = None


class AlignerCache:
    """Per-token-prefix alignment state, keyed by token-id tuples."""

    def __init__(self):
        self._entries: Dict[Tuple[int, ...], CacheEntry] = {}

    def get(self, prefix: Tuple[int, ...]) -> Optional[CacheEntry]:
        return self._entries.get(tuple(prefix))

    def put(self, prefix: Tuple[int, ...], entry: CacheEntry) -> None:
        self._entries[tuple(prefix)] = entry

    def __len__(self):
        return len(self._entries)


def align_incremental(
    cache: AlignerCache,
    prefix: Tuple[int, ...],
    token_id: int,
    chars: Sequence[int],
    emissions: EmissionMatrix,
    window: int = DEFAULT_WINDOW,
    counter: Optional[CellCounter] = None,
) -> AlignmentResult:
    """Extend a cached prefix alignment by one token.

    Produces the same result as ``align_token`` called from scratch at the
    cached end frame; a cache miss falls back to frame 0.
    """
    entry = cache.get(prefix)
    start = entry.end_frame if entry is not None else 0
    cum = entry.cumulative_log_likelihood if entry is not None else 0.0
    result = align_token(chars, start, emissions, window=window, counter=counter)
    cache.put(
        tuple(prefix) + (token_id,),
        CacheEntry(result.end_frame, cum + result.log_likelihood),
    )
    return result
