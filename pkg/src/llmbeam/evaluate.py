"""Text normalization, WER/CER with edit breakdowns, and acronym analysis.

Normalization mirrors the evaluation protocol used for the decoder:
lowercase, strip everything but English letters and spaces, and merge
runs of two or more single-letter words ("u s a" -> "usa") so spelled-out
acronyms compare in one canonical form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple


@dataclass
class EditCounts:
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def __iadd__(self, other: "EditCounts") -> "EditCounts":
        self.substitutions += other.substitutions
        self.insertions += other.insertions
        self.deletions += other.deletions
        return self


@dataclass
class EvalReport:
    wer: float  # percent
    cer: float  # percent
    edits: EditCounts
    per_utterance: List[Tuple[str, float, float]] = field(default_factory=list)
    acronym_accuracy: Optional[float] = None
    wer_with_acronyms: Optional[float] = None
    wer_without_acronyms: Optional[float] = None
    acronym_details: List[Tuple[str, str, bool]] = field(default_factory=list)
    skipped_empty_reference: List[str] = field(default_factory=list)


def normalize(text: str) -> str:
    """Lowercase, letters+spaces only, merge consecutive single letters."""
    text = text.lower()
    text = re.sub(r"[^a-z ]+", " ", text)
    words = text.split()
    merged: List[str] = []
    run: List[str] = []
    for word in words:
        if len(word) == 1:
            run.append(word)
            continue
        _flush_run(merged, run)
        run = []
        merged.append(word)
    _flush_run(merged, run)
    return " ".join(merged)


def _flush_run(out: List[str], run: List[str]) -> None:
    if len(run) >= 2:
        out.append("".join(run))
    else:
        out.extend(run)


def _edit_distance(ref: Sequence, hyp: Sequence) -> EditCounts:
    """Levenshtein with an S/I/D breakdown via backtrace."""
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])
            dele = dist[i - 1][j] + 1
            ins = dist[i][j - 1] + 1
            dist[i][j] = min(sub, dele, ins)
    counts = EditCounts()
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            if ref[i - 1] != hyp[j - 1]:
                counts.substitutions += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            counts.deletions += 1
            i -= 1
        else:
            counts.insertions += 1
            j -= 1
    return counts


def wer(reference: str, hypothesis: str) -> Tuple[float, EditCounts]:
    """Word error rate (fraction, not percent) plus the edit breakdown.

    Raises ZeroDivisionError-adjacent behavior is avoided: an empty
    reference with a non-empty hypothesis yields rate inf.
    """
    ref_words = reference.split()
    hyp_words = hypothesis.split()
    counts = _edit_distance(ref_words, hyp_words)
    if not ref_words:
        rate = 0.0 if not hyp_words else float("inf")
    else:
        rate = counts.total / len(ref_words)
    return rate, counts


def cer(reference: str, hypothesis: str) -> Tuple[float, EditCounts]:
    """Character error rate; spaces count as characters."""
    counts = _edit_distance(list(reference), list(hypothesis))
    if not reference:
        rate = 0.0 if not hypothesis else float("inf")
    else:
        rate = counts.total / len(reference)
    return rate, counts


def detect_acronyms(reference: str) -> List[str]:
    """Reference acronyms in order of appearance.

    An acronym is a maximal run of >= 2 single-letter words after
    punctuation stripping ("u. s. a." -> "usa"), or an all-caps word of
    >= 2 letters in the raw text.
    """
    found: List[str] = []
    for word in re.findall(r"[A-Za-z]{2,}", reference):
        if word.isupper():
            found.append(word.lower())
    stripped = re.sub(r"[^a-z ]+", " ", reference.lower()).split()
    run: List[str] = []
    for word in stripped + [""]:
        if len(word) == 1:
            run.append(word)
        else:
            if len(run) >= 2:
                found.append("".join(run))
            run = []
    return found


def evaluate_corpus(
    references: Dict[str, str],
    hypotheses: Dict[str, str],
    acronyms: bool = False,
    pre_normalized: bool = False,
) -> EvalReport:
    """Micro-averaged corpus WER/CER: total edits over total reference length."""
    word_edits = EditCounts()
    char_edits = EditCounts()
    ref_words_total = 0
    ref_chars_total = 0
    per_utt: List[Tuple[str, float, float]] = []
    skipped: List[str] = []
    acro_total = 0
    acro_correct = 0
    acro_details: List[Tuple[str, str, bool]] = []
    with_acro = EditCounts()
    with_acro_words = 0
    without_acro = EditCounts()
    without_acro_words = 0

    for utt_id in references:
        raw_ref = references[utt_id]
        raw_hyp = hypotheses.get(utt_id, "")
        ref = raw_ref if pre_normalized else normalize(raw_ref)
        hyp = raw_hyp if pre_normalized else normalize(raw_hyp)
        if not ref.split() and hyp.split():
            skipped.append(utt_id)
            continue
        u_wer, wc = wer(ref, hyp)
        u_cer, cc = cer(ref, hyp)
        word_edits += wc
        char_edits += cc
        ref_words_total += len(ref.split())
        ref_chars_total += len(ref)
        per_utt.append((utt_id, u_wer * 100.0, u_cer * 100.0))

        if acronyms:
            utt_acros = detect_acronyms(raw_ref)
            hyp_words = hyp.split()
            counts_left: Dict[str, int] = {}
            for w in hyp_words:
                counts_left[w] = counts_left.get(w, 0) + 1
            for acro in utt_acros:
                hit = counts_left.get(acro, 0) > 0
                if hit:
                    counts_left[acro] -= 1
                    acro_correct += 1
                acro_total += 1
                acro_details.append((utt_id, acro, hit))
            if utt_acros:
                with_acro += wc
                with_acro_words += len(ref.split())
            else:
                without_acro += wc
                without_acro_words += len(ref.split())

    def pct(edits: EditCounts, denom: int) -> float:
        return 100.0 * edits.total / denom if denom else 0.0

    report = EvalReport(
        wer=pct(word_edits, ref_words_total),
        cer=pct(char_edits, ref_chars_total),
        edits=word_edits,
        per_utterance=per_utt,
        skipped_empty_reference=skipped,
    )
    if acronyms:
        report.acronym_accuracy = (
            acro_correct / acro_total if acro_total else None
        )
        report.acronym_details = acro_details
        report.wer_with_acronyms = (
            pct(with_acro, with_acro_words) if with_acro_words else None
        )
        report.wer_without_acronyms = (
            pct(without_acro, without_acro_words) if without_acro_words else None
        )
    return report
