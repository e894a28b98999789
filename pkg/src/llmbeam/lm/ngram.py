"""Backoff N-gram language models: ARPA loading, scoring, and a small
count-based trainer for fixture corpora.

ARPA files store log10 probabilities; everything is converted to natural
log at the boundary so downstream scoring works in one unit system.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .base import LanguageModel, LmCandidate
from ..errors import LlmBeamError
from ..vocab import Vocabulary

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

#: Returned for OOV tokens when the model carries no <unk> entry.
DEFAULT_FLOOR_LOG_PROB = math.log(1e-10)

_LN10 = math.log(10.0)


@dataclass
class NgramModel:
    """Backoff model: (context, token) -> log-prob, context -> backoff weight.

    All stored values are natural logs.
    """

    order: int
    probs: Dict[Tuple[str, ...], float] = field(default_factory=dict)
    backoffs: Dict[Tuple[str, ...], float] = field(default_factory=dict)
    floor_log_prob: float = DEFAULT_FLOOR_LOG_PROB

    def score(self, context: Sequence[str], word: str) -> float:
        """Katz-style backoff: longest matching context wins."""
        ctx = tuple(context)[-(self.order - 1) :] if self.order > 1 else ()
        return self._score(ctx, word)

    def _score(self, ctx: Tuple[str, ...], word: str) -> float:
        key = ctx + (word,)
        if key in self.probs:
            return self.probs[key]
        if ctx:
            backoff = self.backoffs.get(ctx, 0.0)
            return backoff + self._score(ctx[1:], word)
        if (UNK,) in self.probs:
            return self.probs[(UNK,)]
        return self.floor_log_prob

    @property
    def words(self) -> List[str]:
        """Unigram inventory, excluding the BOS marker."""
        return sorted({k[0] for k in self.probs if len(k) == 1 and k[0] != BOS})


def load_arpa(path: Union[str, Path]) -> NgramModel:
    """Parse a standard ARPA file (log10 columns, optional backoff)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    counts: Dict[int, int] = {}
    model = None
    section = None
    in_data = False
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line == "\\data\\":
            in_data = True
            continue
        if line.startswith("ngram ") and in_data:
            spec, n = line[len("ngram ") :].split("=")
            counts[int(spec)] = int(n)
            continue
        if line.startswith("\\") and line.endswith("-grams:"):
            section = int(line[1:].split("-")[0])
            if model is None:
                if not counts:
                    raise LlmBeamError("ARPA file has no \\data\\ section")
                model = NgramModel(order=max(counts))
            continue
        if line == "\\end\\":
            section = None
            continue
        if section is None:
            continue
        parts = line.split()
        if len(parts) < section + 1:
            raise LlmBeamError(f"malformed ARPA {section}-gram line: {raw!r}")
        logp = float(parts[0]) * _LN10
        gram = tuple(parts[1 : 1 + section])
        model.probs[gram] = logp
        if len(parts) > section + 1:
            model.backoffs[gram] = float(parts[1 + section]) * _LN10
    if model is None:
        raise LlmBeamError("ARPA file has no n-gram sections")
    return model


def write_arpa(model: NgramModel, path: Union[str, Path]) -> None:
    """Serialize a model back to ARPA (log10)."""
    by_order: Dict[int, List[Tuple[Tuple[str, ...], float]]] = defaultdict(list)
    for gram, logp in model.probs.items():
        by_order[len(gram)].append((gram, logp))
    out = ["\\data\\"]
    for n in range(1, model.order + 1):
        out.append(f"ngram {n}={len(by_order.get(n, []))}")
    for n in range(1, model.order + 1):
        out.append("")
        out.append(f"\\{n}-grams:")
        for gram, logp in sorted(by_order.get(n, [])):
            cols = [f"{logp / _LN10:.6f}", *gram]
            if gram in model.backoffs:
                cols.append(f"{model.backoffs[gram] / _LN10:.6f}")
            out.append("\t".join(cols))
    out.append("")
    out.append("\\end\\")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def train_ngram(
    texts: Iterable[str], order: int = 2, discount: float = 0.5
) -> NgramModel:
    """Estimate a backoff model from whitespace-tokenized sentences.

    Absolute discounting with properly normalized backoff weights, so the
    conditional distribution over the vocabulary sums to ~1 per context.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    sentences = [[BOS] + text.split() + [EOS] for text in texts]
    gram_counts: Dict[int, Counter] = {n: Counter() for n in range(1, order + 1)}
    for sent in sentences:
        for n in range(1, order + 1):
            for i in range(len(sent) - n + 1):
                gram = tuple(sent[i : i + n])
                if n == 1 and gram == (BOS,):
                    continue  # BOS is context-only, never predicted
                gram_counts[n][gram] += 1

    model = NgramModel(order=order)

    # Unigrams: MLE over predicted events (words + EOS).
    uni_total = sum(gram_counts[1].values())
    uni_prob = {g[0]: c / uni_total for g, c in gram_counts[1].items()}
    for word, p in uni_prob.items():
        model.probs[(word,)] = math.log(p)

    def lower_prob(ctx: Tuple[str, ...], word: str) -> float:
        """exp(score) under the already-built lower orders."""
        return math.exp(model._score(ctx, word))

    for n in range(2, order + 1):
        contexts: Dict[Tuple[str, ...], List[Tuple[str, int]]] = defaultdict(list)
        for gram, c in gram_counts[n].items():
            contexts[gram[:-1]].append((gram[-1], c))
        events = {g[0] for g in gram_counts[1]}
        for ctx, followers in contexts.items():
            total = sum(c for _, c in followers)
            kept_mass = 0.0
            lower_mass = 0.0
            kept: Dict[str, float] = {}
            for word, c in followers:
                p = max(c - discount, 0.0) / total
                if p > 0.0:
                    kept[word] = p
                    kept_mass += p
                lower_mass += lower_prob(ctx[1:], word)
            unseen = events - {w for w, _ in followers}
            if unseen:
                leftover = max(1.0 - kept_mass, 0.0)
                denom = max(1.0 - lower_mass, 1e-12)
                model.backoffs[ctx] = math.log(max(leftover / denom, 1e-12))
            else:
                # Every event was observed after this context: nothing to
                # back off to, so return the discounted mass pro rata.
                kept = {w: p / kept_mass for w, p in kept.items()}
                model.backoffs[ctx] = math.log(1e-12)
            for word, p in kept.items():
                model.probs[ctx + (word,)] = math.log(p)
    return model


class NgramLm(LanguageModel):
    """Vocabulary-bound N-gram scorer; EOS maps to the ARPA </s> entry."""

    def __init__(self, vocabulary: Vocabulary, model: NgramModel):
        super().__init__(vocabulary)
        self.model = model

    def _context(self, prefix: Tuple[int, ...]) -> List[str]:
        words = [BOS]
        for token_id in prefix:
            token = self.vocabulary[token_id]
            if not token.is_eos and token.text:
                words.append(token.text)
        return words

    def score(self, prefix: Tuple[int, ...], token_id: int) -> float:
        context = self._context(prefix)
        token = self.vocabulary[token_id]
        word = EOS if token.is_eos else token.text
        return self.model.score(context, word)

    def _score_all(self, prefix: Tuple[int, ...]) -> List[LmCandidate]:
        context = self._context(prefix)
        out = []
        for token in self.vocabulary.tokens:
            word = EOS if token.is_eos else token.text
            out.append(LmCandidate(token.id, self.model.score(context, word)))
        return out
