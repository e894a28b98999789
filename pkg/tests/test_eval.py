import math
import random
import string

import pytest

from llmbeam.evaluate import (
    cer,
    detect_acronyms,
    evaluate_corpus,
    normalize,
    wer,
)

from .oracles import simple_edit_distance


def test_normalize_examples():
    assert normalize("U. S. A.") == "usa"
    assert normalize("Hello, World!") == "hello world"
    assert normalize("a cat") == "a cat"  # lone single letter survives
    assert normalize("the U S economy") == "the us economy"
    assert normalize("it's") == "it s"
    assert normalize("  Multiple   spaces ") == "multiple spaces"
    assert normalize("123 456") == ""


def test_normalize_idempotent_on_random_text():
    rng = random.Random(7)
    chars = string.ascii_letters + string.digits + " .,!?'-"
    for _ in range(200):
        text = "".join(rng.choice(chars) for _ in range(rng.randrange(0, 40)))
        once = normalize(text)
        assert normalize(once) == once


def test_wer_hand_cases():
    rate, counts = wer("the cat sat", "the cat sat")
    assert rate == 0.0 and counts.total == 0
    rate, counts = wer("the cat sat", "the bat sat")
    assert rate == pytest.approx(1 / 3)
    assert (counts.substitutions, counts.insertions, counts.deletions) == (1, 0, 0)
    rate, counts = wer("the cat", "the cat sat")
    assert counts.insertions == 1 and rate == pytest.approx(0.5)
    rate, counts = wer("the cat sat", "the cat")
    assert counts.deletions == 1 and rate == pytest.approx(1 / 3)
    assert wer("", "")[0] == 0.0
    assert math.isinf(wer("", "something")[0])


def test_cer_hand_case():
    rate, counts = cer("abc", "axc")
    assert rate == pytest.approx(1 / 3) and counts.substitutions == 1
    # Spaces count as characters.
    assert cer("a b", "ab")[0] == pytest.approx(1 / 3)


def test_edit_counts_match_plain_dp():
    rng = random.Random(11)
    vocab = ["a", "b", "c", "d"]
    for _ in range(300):
        ref = [rng.choice(vocab) for _ in range(rng.randrange(0, 8))]
        hyp = [rng.choice(vocab) for _ in range(rng.randrange(0, 8))]
        _, counts = wer(" ".join(ref), " ".join(hyp))
        assert counts.total == simple_edit_distance(ref, hyp)


def test_detect_acronyms():
    assert detect_acronyms("the USA economy") == ["usa"]
    assert detect_acronyms("u. s. a. and NATO") == ["nato", "usa"]
    assert detect_acronyms("a cat") == []  # single letter alone is not one
    assert detect_acronyms("the U S of A") == ["us"]
    assert detect_acronyms("plain words only") == []


def test_corpus_micro_average():
    refs = {"u1": "the cat sat", "u2": "a dog"}
    hyps = {"u1": "the cat sat", "u2": "a frog"}
    report = evaluate_corpus(refs, hyps)
    # 1 substitution over 5 reference words.
    assert report.wer == pytest.approx(20.0)
    assert report.edits.substitutions == 1
    assert len(report.per_utterance) == 2
    # Micro average differs from the mean of per-utterance rates.
    per_utt_mean = sum(w for _, w, _ in report.per_utterance) / 2
    assert per_utt_mean == pytest.approx(25.0)


def test_corpus_missing_hypothesis_counts_as_deletions():
    report = evaluate_corpus({"u1": "two words"}, {})
    assert report.wer == pytest.approx(100.0)
    assert report.edits.deletions == 2


def test_corpus_skips_empty_reference_with_output():
    report = evaluate_corpus({"u1": "", "u2": "ok"}, {"u1": "noise", "u2": "ok"})
    assert report.skipped_empty_reference == ["u1"]
    assert report.wer == 0.0


def test_acronym_report():
    refs = {
        "u1": "the USA and the FBI",
        "u2": "meet the F. B. I. agent",
        "u3": "no acronyms here",
    }
    hyps = {
        "u1": "the usa and the fbi",
        "u2": "meet the fbi agent",
        "u3": "no acronyms here",
    }
    report = evaluate_corpus(refs, hyps, acronyms=True)
    assert report.acronym_accuracy == pytest.approx(1.0)
    assert report.wer_with_acronyms == pytest.approx(0.0)
    assert report.wer_without_acronyms == pytest.approx(0.0)
    assert {(u, a) for u, a, hit in report.acronym_details if hit} == {
        ("u1", "usa"),
        ("u1", "fbi"),
        ("u2", "fbi"),
    }


def test_acronym_missed_when_spelled_out():
    refs = {"u1": "the FBI agent"}
    hyps = {"u1": "the f b i agent"}  # normalizes to "fbi": counts as a hit
    report = evaluate_corpus(refs, hyps, acronyms=True)
    assert report.acronym_accuracy == pytest.approx(1.0)
    refs2 = {"u1": "the FBI agent"}
    hyps2 = {"u1": "the bureau agent"}
    report2 = evaluate_corpus(refs2, hyps2, acronyms=True)
    assert report2.acronym_accuracy == pytest.approx(0.0)
    assert report2.wer_with_acronyms > 0.0


def test_acronym_multiset_matching():
    # Two reference occurrences but only one in the hypothesis.
    refs = {"u1": "USA versus USA"}
    hyps = {"u1": "usa versus canada"}
    report = evaluate_corpus(refs, hyps, acronyms=True)
    assert report.acronym_accuracy == pytest.approx(0.5)


def test_pre_normalized_passthrough():
    refs = {"u1": "ALREADY Normalized"}
    hyps = {"u1": "ALREADY Normalized"}
    report = evaluate_corpus(refs, hyps, pre_normalized=True)
    assert report.wer == 0.0
