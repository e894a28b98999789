"""HTTP client for the remote language-model protocol.

POST {endpoint}/v1/topk with {"prefix": [token texts], "k": int}; the
server answers {"log_base": "e"|"10", "candidates": [{"token": str,
"logprob": float}, ...]}. Transport failures, timeouts, and malformed
payloads raise distinct exception types; transport/timeout errors are
retried per configuration.
"""

from __future__ import annotations

import logging
import math
import time
from typing import List, Tuple

import requests

from .base import LanguageModel, LmCandidate
from ..errors import RemoteProtocolError, RemoteTimeoutError, RemoteTransportError
from ..vocab import Vocabulary, WORD_MARKER

logger = logging.getLogger(__name__)

_LN10 = math.log(10.0)

DEFAULT_TIMEOUT_S = 30.0


class RemoteLm(LanguageModel):
    def __init__(
        self,
        endpoint: str,
        vocabulary: Vocabulary,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        max_retries: int = 2,
        retry_backoff_s: float = 0.2,
        session=None,
    ):
        super().__init__(vocabulary)
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.retry_backoff_s = retry_backoff_s
        self.session = session or requests.Session()

    def top_k(self, prefix: Tuple[int, ...], k: int) -> List[LmCandidate]:
        if k < 1:
            raise ValueError("k must be >= 1")
        key = (tuple(prefix), k)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._fetch(tuple(prefix), k)
            self._cache[key] = cached
        return list(cached)

    def eos_log_prob(self, prefix: Tuple[int, ...]) -> float:
        eos_id = self.vocabulary.eos_id
        for cand in self.top_k(prefix, max(len(self.vocabulary.tokens), 1)):
            if cand.token_id == eos_id:
                return cand.log_prob
        return float("-inf")

    def _score_all(self, prefix):  # pragma: no cover - remote has no full scan
        raise NotImplementedError("remote models only expose top-k")

    def _fetch(self, prefix: Tuple[int, ...], k: int) -> List[LmCandidate]:
        payload = {
            "prefix": [self.vocabulary.surface(t) for t in prefix],
            "k": k,
        }
        body = self._post(payload)
        return self._parse(body, k)

    def _post(self, payload) -> dict:
        url = f"{self.endpoint}/v1/topk"
        last_error = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self.session.post(url, json=payload, timeout=self.timeout_s)
            except requests.Timeout as exc:
                last_error = RemoteTimeoutError(
                    f"remote LM timed out after {self.timeout_s}s: {url}"
                )
                last_error.__cause__ = exc
            except requests.RequestException as exc:
                last_error = RemoteTransportError(f"remote LM unreachable: {exc}")
                last_error.__cause__ = exc
            else:
                if response.status_code != 200:
                    raise RemoteProtocolError(
                        f"remote LM returned HTTP {response.status_code}: "
                        f"{response.text[:200]!r}"
                    )
                try:
                    return response.json()
                except ValueError as exc:
                    raise RemoteProtocolError(
                        f"remote LM sent non-JSON payload: {response.text[:200]!r}"
                    ) from exc
            if attempt < self.max_retries:
                time.sleep(self.retry_backoff_s * (attempt + 1))
        raise last_error

    def _parse(self, body: dict, k: int) -> List[LmCandidate]:
        if not isinstance(body, dict) or "candidates" not in body or "log_base" not in body:
            raise RemoteProtocolError(
                f"response missing required fields: {str(body)[:200]!r}"
            )
        log_base = body["log_base"]
        if log_base not in ("e", "10"):
            raise RemoteProtocolError(f"unknown log_base {log_base!r}")
        scale = 1.0 if log_base == "e" else _LN10
        out: List[LmCandidate] = []
        for item in body["candidates"]:
            if (
                not isinstance(item, dict)
                or "token" not in item
                or "logprob" not in item
                or not isinstance(item["token"], str)
                or not isinstance(item["logprob"], (int, float))
            ):
                raise RemoteProtocolError(f"malformed candidate entry: {item!r}")
            token_id = self._resolve(item["token"])
            if token_id is None:
                logger.warning(
                    "remote LM candidate %r is not in the vocabulary; dropped",
                    item["token"],
                )
                continue
            out.append(LmCandidate(token_id, float(item["logprob"]) * scale))
        out.sort(key=lambda c: (-c.log_prob, c.token_id))
        return out[:k]

    def _resolve(self, text: str):
        if text == "</s>":
            return self.vocabulary.eos_id
        if text.startswith(WORD_MARKER):
            return self.vocabulary.id_of(text[len(WORD_MARKER) :], word_initial=True)
        if text.startswith(" "):
            return self.vocabulary.id_of(text[1:], word_initial=True)
        return self.vocabulary.id_of(text, word_initial=False)
