from .base import LanguageModel, LmCandidate
from .uniform import UniformLm
from .ngram import NgramLm, NgramModel, load_arpa, train_ngram, write_arpa
from .remote import RemoteLm

__all__ = [
    "LanguageModel",
    "LmCandidate",
    "UniformLm",
    "NgramLm",
    "NgramModel",
    "load_arpa",
    "train_ngram",
    "write_arpa",
    "RemoteLm",
]
