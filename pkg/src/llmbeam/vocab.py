"""Token inventory: loading, alphabetic filtering, character decomposition.

Token lists are one token per line, "#" comments, with a leading "▁"
marking word-initial tokens (the usual BPE space-marker convention).
Tokens containing anything but English letters are dropped at load time
so every surviving token can be aligned against the acoustic alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, List, Tuple, Union

from .emissions import CharAlphabet
from .errors import VocabularyError

WORD_MARKER = "▁"


@dataclass(frozen=True)
class Token:
    id: int
    text: str  # lowercase, no word marker
    word_initial: bool
    chars: Tuple[int, ...]  # alphabet indices, separator-prefixed if word-initial
    is_eos: bool = False

    @property
    def is_whitespace(self) -> bool:
        """True for tokens that decompose to the separator alone."""
        return not self.is_eos and self.text == "" and self.word_initial


@dataclass(frozen=True)
class Vocabulary:
    tokens: Tuple[Token, ...]
    eos_id: int
    alphabet: CharAlphabet
    dropped_count: int = 0

    def __len__(self):
        return len(self.tokens)

    def __getitem__(self, token_id: int) -> Token:
        return self.tokens[token_id]

    @property
    def eos(self) -> Token:
        return self.tokens[self.eos_id]

    @property
    def real_tokens(self) -> Tuple[Token, ...]:
        return tuple(t for t in self.tokens if not t.is_eos)

    def id_of(self, text: str, word_initial: bool = True):
        """Look up a token id by (lowercased) text; None when absent."""
        return self._index.get((text.lower(), word_initial))

    @cached_property
    def _index(self):
        return {(t.text, t.word_initial): t.id for t in self.tokens if not t.is_eos}

    def surface(self, token_id: int) -> str:
        """Marker-carrying surface form, as a remote LM would spell it."""
        tok = self.tokens[token_id]
        if tok.is_eos:
            return "</s>"
        return (WORD_MARKER if tok.word_initial else "") + tok.text


def decompose(text: str, word_initial: bool, alphabet: CharAlphabet) -> Tuple[int, ...]:
    """Map token text to alphabet indices, separator-prefixed iff word-initial.

    Never emits the blank index; raises for out-of-alphabet characters.
    """
    indices: List[int] = []
    if word_initial:
        indices.append(alphabet.separator_index)
    for ch in text:
        ch = ch.lower()
        try:
            idx = alphabet.symbols.index(ch)
        except ValueError:
            raise VocabularyError(f"character {ch!r} is not in the alphabet") from None
        if idx == alphabet.blank_index:
            raise VocabularyError("token text may not contain the blank symbol")
        indices.append(idx)
    if not indices:
        raise VocabularyError("token decomposes to nothing")
    return tuple(indices)


def _is_keepable(text: str) -> bool:
    """English alphabetic characters only (no digits or specials).

    A bare word marker survives as the whitespace token.
    """
    return text == "" or all("a" <= c <= "z" or "A" <= c <= "Z" for c in text)


def load_vocab(path: Union[str, Path], alphabet: CharAlphabet) -> Vocabulary:
    """Load a token list, filter it, and bind decompositions to the alphabet."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return build_vocab(lines, alphabet)


def build_vocab(entries: Iterable[str], alphabet: CharAlphabet) -> Vocabulary:
    """Same as :func:`load_vocab` but from in-memory lines."""
    tokens: List[Token] = []
    seen_raw = set()
    seen_norm = set()
    dropped = 0
    for raw in entries:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in seen_raw:
            raise VocabularyError(f"duplicate token text {line!r}")
        seen_raw.add(line)
        word_initial = line.startswith(WORD_MARKER)
        text = line[len(WORD_MARKER) :] if word_initial else line
        if not _is_keepable(text):
            dropped += 1
            continue
        if text == "" and not word_initial:
            dropped += 1
            continue
        norm = (text.lower(), word_initial)
        if norm in seen_norm:
            # case-only variant of an earlier token: first wins
            dropped += 1
            continue
        seen_norm.add(norm)
        tokens.append(
            Token(
                id=len(tokens),
                text=text.lower(),
                word_initial=word_initial,
                chars=decompose(text.lower(), word_initial, alphabet),
            )
        )
    if not tokens:
        raise VocabularyError("vocabulary is empty after filtering")
    eos = Token(id=len(tokens), text="", word_initial=False, chars=(), is_eos=True)
    return Vocabulary(
        tokens=tuple(tokens) + (eos,),
        eos_id=eos.id,
        alphabet=alphabet,
        dropped_count=dropped,
    )
