import numpy as np
import pytest

from llmbeam.emissions import CharAlphabet, make_emissions


@pytest.fixture
def full_alphabet():
    return CharAlphabet.default()


@pytest.fixture
def tiny_alphabet():
    # a, b, separator, blank: small enough for exhaustive oracles
    return CharAlphabet.from_string("ab|∅")


def random_emissions(alphabet, t, rng, frame_ms=20):
    probs = rng.dirichlet(np.ones(len(alphabet)), size=t)
    return make_emissions(probs, alphabet, frame_duration_ms=frame_ms)


@pytest.fixture
def make_random_emissions():
    return random_emissions
