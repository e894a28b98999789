import math

import numpy as np
import pytest

from llmbeam.emissions import (
    CharAlphabet,
    EmissionMatrix,
    load_emissions,
    make_emissions,
    save_emissions,
)
from llmbeam.errors import EmissionsFormatError


def test_alphabet_roundtrip_and_indices():
    alpha = CharAlphabet.default()
    assert len(alpha) == 28
    assert alpha.symbols[alpha.blank_index] == "∅"
    assert alpha.symbols[alpha.separator_index] == "|"
    assert CharAlphabet.from_string(alpha.to_string()) == alpha


def test_alphabet_rejects_duplicates_and_bad_symbols():
    with pytest.raises(EmissionsFormatError):
        CharAlphabet.from_string("aa|∅")
    with pytest.raises(EmissionsFormatError):
        CharAlphabet.from_string("aB|∅")
    with pytest.raises(EmissionsFormatError):
        CharAlphabet.from_string("ab∅")  # no separator


def test_text_load_uniform_rows(tmp_path):
    path = tmp_path / "u.txt"
    path.write_text("2 4 20 ab|∅\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n")
    m = load_emissions(path, format="text")
    assert m.num_frames == 2
    assert np.allclose(m.frames, math.log(0.25), atol=1e-6)


def test_text_load_duration_matches_lookahead(tmp_path):
    rows = "\n".join("0.25 0.25 0.25 0.25" for _ in range(75))
    path = tmp_path / "d.txt"
    path.write_text(f"75 4 20 ab|∅\n{rows}\n")
    m = load_emissions(path, format="text")
    assert m.duration_ms == 1500


def test_text_load_rejects_unnormalized(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 4 20 ab|∅\n0.2 0.2 0.2 0.3\n")
    with pytest.raises(EmissionsFormatError, match="row 0"):
        load_emissions(path, format="text")


def test_text_load_rejects_dimension_mismatch(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 4 20 ab|∅\n0.25 0.25 0.25 0.25\n")
    with pytest.raises(EmissionsFormatError, match="T=2"):
        load_emissions(path, format="text")


def test_binary_roundtrip_bit_identical(tmp_path, tiny_alphabet):
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(4), size=7)
    m = make_emissions(probs, tiny_alphabet)
    p1 = tmp_path / "m.ctce"
    p2 = tmp_path / "m2.ctce"
    save_emissions(m, p1)
    loaded = load_emissions(p1, format="binary")
    save_emissions(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert np.array_equal(loaded.frames, m.frames)
    assert loaded.alphabet == m.alphabet
    assert loaded.frame_duration_ms == m.frame_duration_ms


def test_text_and_binary_agree(tmp_path, tiny_alphabet):
    rng = np.random.default_rng(2)
    probs = rng.dirichlet(np.ones(4), size=5)
    m = make_emissions(probs, tiny_alphabet)
    bpath = tmp_path / "m.ctce"
    save_emissions(m, bpath)
    tpath = tmp_path / "m.txt"
    rows = "\n".join(" ".join(f"{v:.9f}" for v in row) for row in probs)
    tpath.write_text(f"5 4 20 {tiny_alphabet.to_string()}\n{rows}\n")
    mb = load_emissions(bpath, format="binary")
    mt = load_emissions(tpath, format="text")
    assert np.allclose(mb.frames, mt.frames, atol=1e-6)


def test_binary_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ctce"
    path.write_bytes(b"XXXX" + b"\x00" * 20)
    with pytest.raises(EmissionsFormatError, match="magic"):
        load_emissions(path, format="binary")


def test_slice_semantics(tiny_alphabet):
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(4), size=10)
    m = make_emissions(probs, tiny_alphabet)
    assert np.array_equal(m.slice(0, 10).frames, m.frames)
    sub = m.slice(3, 5)
    assert sub.num_frames == 2
    assert np.array_equal(sub.frames[0], m.frames[3])
    with pytest.raises(EmissionsFormatError):
        m.slice(5, 5)
    with pytest.raises(EmissionsFormatError):
        m.slice(-1, 5)
    # composition
    outer = m.slice(2, 9)
    assert np.array_equal(outer.slice(1, 4).frames, m.slice(3, 6).frames)
    # views share memory (no copy)
    assert sub.frames.base is not None


def test_matrix_is_immutable(tiny_alphabet):
    m = make_emissions([[0.25, 0.25, 0.25, 0.25]], tiny_alphabet)
    with pytest.raises(ValueError):
        m.frames[0, 0] = 0.0


def test_positive_logs_rejected(tiny_alphabet):
    with pytest.raises(EmissionsFormatError, match="<= 0"):
        EmissionMatrix(np.array([[0.1, -1.0, -1.0, -1.0]]), 20, tiny_alphabet)
