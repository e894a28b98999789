import logging
import math

import pytest

from llmbeam.errors import (
    RemoteProtocolError,
    RemoteTimeoutError,
    RemoteTransportError,
)
from llmbeam.lm.ngram import NgramLm, train_ngram
from llmbeam.lm.remote import RemoteLm
from llmbeam.lm.stub_server import StubLmServer, language_model_responder
from llmbeam.lm.uniform import UniformLm
from llmbeam.vocab import build_vocab

_LN10 = math.log(10.0)


@pytest.fixture
def vocab(full_alphabet):
    return build_vocab(["▁the", "▁cat", "▁sat", "s", "ing"], full_alphabet)


@pytest.fixture
def local_lm(vocab):
    model = train_ngram(["the cat sat", "the cat", "cat sat"], order=2)
    return NgramLm(vocab, model)


def test_roundtrip_natural_log(vocab, local_lm):
    with StubLmServer(language_model_responder(local_lm)) as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        for prefix in [(), (0,), (0, 1)]:
            got = remote.top_k(prefix, 4)
            want = local_lm.top_k(prefix, 4)
            assert [c.token_id for c in got] == [c.token_id for c in want]
            for g, w in zip(got, want):
                assert g.log_prob == pytest.approx(w.log_prob, abs=1e-9)


def test_roundtrip_log10_converted(vocab, local_lm):
    base = language_model_responder(local_lm)

    def log10_responder(prefix_texts, k):
        return [(tok, lp / _LN10) for tok, lp in base(prefix_texts, k)]

    with StubLmServer(log10_responder, log_base="10") as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        got = remote.top_k((), 4)
        want = local_lm.top_k((), 4)
        for g, w in zip(got, want):
            assert g.log_prob == pytest.approx(w.log_prob, abs=1e-9)


def test_eos_log_prob_via_remote(vocab, local_lm):
    with StubLmServer(language_model_responder(local_lm)) as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        prefix = (vocab.id_of("the"), vocab.id_of("cat"))
        assert remote.eos_log_prob(prefix) == pytest.approx(
            local_lm.eos_log_prob(prefix), abs=1e-9
        )


def test_unknown_tokens_dropped_with_warning(vocab, caplog):
    def responder(prefix_texts, k):
        return [("▁the", -1.0), ("▁zebra", -0.5), ("xyzzy", -0.25)]

    with StubLmServer(responder) as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        with caplog.at_level(logging.WARNING):
            got = remote.top_k((), 10)
    assert [c.token_id for c in got] == [vocab.id_of("the")]
    assert sum("dropped" in r.message for r in caplog.records) == 2


def test_prefix_sent_as_surface_forms(vocab):
    seen = []

    def responder(prefix_texts, k):
        seen.append(list(prefix_texts))
        return [("▁the", -1.0)]

    with StubLmServer(responder) as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        remote.top_k((vocab.id_of("the"), vocab.id_of("s", word_initial=False)), 1)
    assert seen == [["▁the", "s"]]


def test_memoization_avoids_repeat_requests(vocab, local_lm):
    with StubLmServer(language_model_responder(local_lm)) as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        remote.top_k((0,), 3)
        remote.top_k((0,), 3)
        assert server.requests_seen == 1
        remote.clear_cache()
        remote.top_k((0,), 3)
        assert server.requests_seen == 2


def test_malformed_json_raises_protocol_error(vocab):
    with StubLmServer(lambda p, k: [], mode="malformed") as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        with pytest.raises(RemoteProtocolError, match="non-JSON"):
            remote.top_k((), 1)
        assert server.requests_seen == 1  # protocol errors are not retried


def test_missing_fields_raises_protocol_error(vocab):
    with StubLmServer(lambda p, k: [], mode="missing_fields") as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        with pytest.raises(RemoteProtocolError, match="missing required fields"):
            remote.top_k((), 1)


def test_bad_log_base_raises_protocol_error(vocab):
    with StubLmServer(lambda p, k: [("▁the", -1.0)], log_base="2") as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        with pytest.raises(RemoteProtocolError, match="log_base"):
            remote.top_k((), 1)


def test_http_error_raises_protocol_error(vocab):
    with StubLmServer(lambda p, k: [], mode="http_error") as server:
        remote = RemoteLm(server.endpoint, vocab, timeout_s=5)
        with pytest.raises(RemoteProtocolError, match="HTTP 500"):
            remote.top_k((), 1)
        assert server.requests_seen == 1


def test_timeout_raises_and_retries(vocab):
    with StubLmServer(lambda p, k: [], mode="slow", delay_s=1.0) as server:
        remote = RemoteLm(
            server.endpoint,
            vocab,
            timeout_s=0.05,
            max_retries=1,
            retry_backoff_s=0.01,
        )
        with pytest.raises(RemoteTimeoutError):
            remote.top_k((), 1)
        assert server.requests_seen == 2  # original attempt + one retry


def test_transport_error_on_dead_endpoint(vocab):
    remote = RemoteLm(
        "http://127.0.0.1:9",  # discard port: nothing listens there
        vocab,
        timeout_s=0.2,
        max_retries=1,
        retry_backoff_s=0.01,
    )
    with pytest.raises(RemoteTransportError):
        remote.top_k((), 1)
