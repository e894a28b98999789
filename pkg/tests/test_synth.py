import numpy as np
import pytest

from llmbeam.baselines import greedy_decode
from llmbeam.errors import ConfigError
from llmbeam.synth import (
    SynthSpec,
    parse_synth_spec,
    render_emissions,
    rng_for,
)


def test_temperature_zero_greedy_recovery(full_alphabet):
    for text in ("the cat", "hello world", "a", "one two three four"):
        m = render_emissions(text, full_alphabet)
        assert greedy_decode(m) == text


def test_normalization_applied_before_rendering(full_alphabet):
    m = render_emissions("Hello, World!", full_alphabet)
    assert greedy_decode(m) == "hello world"


def test_frame_budget(full_alphabet):
    # "ab c" renders |,a,b,|,c -> five targets, frames_per_char each.
    m = render_emissions("ab c", full_alphabet, frames_per_char=3)
    assert m.num_frames == 15
    assert render_emissions("ab c", full_alphabet, frames_per_char=1).num_frames == 5


def test_rows_are_valid_distributions(full_alphabet):
    m = render_emissions("test words", full_alphabet, temperature=1.5,
                         rng=rng_for(3, "x"))
    sums = np.exp(m.frames.astype(np.float64)).sum(axis=1)
    assert np.allclose(sums, 1.0, atol=1e-4)


def test_rng_for_is_stable_and_per_utterance():
    a1 = rng_for(7, "utt1").standard_normal(4)
    a2 = rng_for(7, "utt1").standard_normal(4)
    b = rng_for(7, "utt2").standard_normal(4)
    c = rng_for(8, "utt1").standard_normal(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)


def test_temperature_perturbs_matrix(full_alphabet):
    clean = render_emissions("the cat", full_alphabet, temperature=0.0)
    noisy = render_emissions(
        "the cat", full_alphabet, temperature=2.0, rng=rng_for(1, "u")
    )
    assert clean.num_frames == noisy.num_frames
    assert not np.array_equal(clean.frames, noisy.frames)


def test_render_rejects_bad_input(full_alphabet):
    with pytest.raises(ConfigError):
        render_emissions("123 456", full_alphabet)  # normalizes to nothing
    with pytest.raises(ConfigError):
        render_emissions("ok", full_alphabet, frames_per_char=0)


def test_parse_synth_spec():
    lines = [
        "# comment",
        "",
        "u1\tthe cat",
        "u2\thello\t5",
        "u3\tworld\t4\t1.25",
    ]
    specs = parse_synth_spec(lines)
    assert specs == [
        SynthSpec("u1", "the cat", 3, 0.0),
        SynthSpec("u2", "hello", 5, 0.0),
        SynthSpec("u3", "world", 4, 1.25),
    ]
    with pytest.raises(ConfigError, match="utt_id<TAB>text"):
        parse_synth_spec(["no tab here"])
    with pytest.raises(ConfigError, match="empty"):
        parse_synth_spec(["# only comments"])
