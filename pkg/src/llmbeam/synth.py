"""Synthetic emission rendering for fixtures and end-to-end tests.

A reference string becomes a CTC-shaped emission matrix: every character
gets one sharp frame followed by blank-dominated padding frames, with a
separator frame before each word. Gaussian logit noise scaled by the
temperature degrades the matrix; at temperature 0 the greedy decoder
recovers the text exactly.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .emissions import CharAlphabet, EmissionMatrix
from .errors import ConfigError
from .evaluate import normalize

DEFAULT_SHARPNESS = 6.0


@dataclass(frozen=True)
class SynthSpec:
    utt_id: str
    text: str
    frames_per_char: int = 3
    temperature: float = 0.0


def render_emissions(
    text: str,
    alphabet: CharAlphabet,
    frames_per_char: int = 3,
    temperature: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    sharpness: float = DEFAULT_SHARPNESS,
    frame_duration_ms: int = 20,
) -> EmissionMatrix:
    """Render a normalized text into an emission matrix."""
    if frames_per_char < 1:
        raise ConfigError("frames_per_char must be >= 1")
    clean = normalize(text)
    if not clean:
        raise ConfigError("text normalizes to nothing")
    rng = rng or np.random.default_rng(0)

    targets: List[int] = []
    for word in clean.split():
        targets.append(alphabet.separator_index)
        for ch in word:
            if ch not in alphabet.symbols:
                raise ConfigError(f"character {ch!r} not in alphabet")
            targets.append(alphabet.index_of(ch))

    frame_targets: List[int] = []
    for t in targets:
        frame_targets.append(t)
        frame_targets.extend([alphabet.blank_index] * (frames_per_char - 1))

    c = len(alphabet)
    logits = np.zeros((len(frame_targets), c), dtype=np.float64)
    logits[np.arange(len(frame_targets)), frame_targets] = sharpness
    if temperature > 0:
        logits += temperature * rng.standard_normal(logits.shape)
    # row-wise softmax
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    frames = np.log(probs).astype(np.float32)
    return EmissionMatrix(frames, frame_duration_ms, alphabet)


def rng_for(seed: int, utt_id: str) -> np.random.Generator:
    """Stable per-utterance generator (independent of iteration order)."""
    return np.random.default_rng([seed, zlib.crc32(utt_id.encode("utf-8"))])


def parse_synth_spec(lines: List[str]) -> List[SynthSpec]:
    """Tab-separated spec rows: utt_id, text, [frames_per_char], [temperature]."""
    specs = []
    for raw in lines:
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise ConfigError(f"synth spec line needs utt_id<TAB>text: {raw!r}")
        utt_id, text = parts[0], parts[1]
        frames_per_char = int(parts[2]) if len(parts) > 2 and parts[2] else 3
        temperature = float(parts[3]) if len(parts) > 3 and parts[3] else 0.0
        specs.append(SynthSpec(utt_id, text, frames_per_char, temperature))
    if not specs:
        raise ConfigError("synth spec file is empty")
    return specs
