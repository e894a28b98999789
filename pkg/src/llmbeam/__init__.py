"""LLM-guided iterative beam decoding for CTC emission matrices."""

from .aligner import AlignerCache, AlignmentResult, align_incremental, align_token
from .baselines import greedy_decode, prefix_beam_decode
from .decoder import (
    DecodeResult,
    DecoderConfig,
    Hypothesis,
    LlmBeamDecoder,
    beam_top_b,
    decode,
    step_score,
)
from .emissions import (
    CharAlphabet,
    EmissionMatrix,
    load_emissions,
    make_emissions,
    save_emissions,
)
from .evaluate import EvalReport, cer, evaluate_corpus, normalize, wer
from .lm import NgramLm, RemoteLm, UniformLm, load_arpa, train_ngram
from .presets import PRESETS, preset_weights
from .vocab import Token, Vocabulary, build_vocab, load_vocab

__version__ = "0.1.0"

__all__ = [
    "AlignerCache",
    "AlignmentResult",
    "align_incremental",
    "align_token",
    "greedy_decode",
    "prefix_beam_decode",
    "DecodeResult",
    "DecoderConfig",
    "Hypothesis",
    "LlmBeamDecoder",
    "beam_top_b",
    "decode",
    "step_score",
    "CharAlphabet",
    "EmissionMatrix",
    "load_emissions",
    "make_emissions",
    "save_emissions",
    "EvalReport",
    "cer",
    "evaluate_corpus",
    "normalize",
    "wer",
    "NgramLm",
    "RemoteLm",
    "UniformLm",
    "load_arpa",
    "train_ngram",
    "PRESETS",
    "preset_weights",
    "Token",
    "Vocabulary",
    "build_vocab",
    "load_vocab",
]
