"""Shipped (dataset, LM) hyperparameter presets.

alpha weights the language model, beta is the token insertion bonus.
Values are tuned per dataset/LM pair; they are stable across acoustic
models trained with the CTC objective. The WSJ0 / LLaMA 2 pair is the
package-wide fallback default.
"""

from __future__ import annotations

from typing import Dict, Tuple

from .errors import ConfigError

#: preset name -> (alpha, beta)
PRESETS: Dict[str, Tuple[float, float]] = {
    "wsj0-llama2": (0.0650, 0.0051),
    "wsj0-falcon": (0.0949, 0.0073),
    "wsj0-gpt2": (0.0626, 0.0090),
    "tedlium3-llama2": (0.0679, 0.0028),
    "tedlium3-falcon": (0.0695, 0.0015),
    "tedlium3-gpt2": (0.0689, 0.0061),
    "allsstar-llama2": (0.0694, 0.0331),
    "allsstar-falcon": (0.1379, 0.0161),
    "allsstar-gpt2": (0.0999, 0.0449),
}

DEFAULT_PRESET = "wsj0-llama2"


def preset_weights(name: str) -> Tuple[float, float]:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; choose one of: {known}") from None
