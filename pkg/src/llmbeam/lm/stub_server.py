"""Stub HTTP server speaking the remote-LM wire protocol.

Wraps any local :class:`LanguageModel` (or a fixed candidate table) behind
POST /v1/topk, for protocol round-trip tests and for trying the decoder
against an external process. Failure modes exercise client error paths.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, List, Optional, Tuple


class StubLmServer:
    """Serves top-k candidates over HTTP on 127.0.0.1.

    ``responder(prefix_texts, k)`` returns [(token_text, logprob), ...].
    ``mode`` selects a failure behavior: "ok", "malformed" (non-JSON body),
    "missing_fields" (JSON without candidates), "http_error" (500), or
    "slow" (sleeps ``delay_s`` before answering).
    """

    def __init__(
        self,
        responder: Callable[[List[str], int], List[Tuple[str, float]]],
        log_base: str = "e",
        mode: str = "ok",
        delay_s: float = 0.0,
        port: int = 0,
    ):
        self.responder = responder
        self.log_base = log_base
        self.mode = mode
        self.delay_s = delay_s
        self.requests_seen = 0

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                stub.requests_seen += 1
                if self.path != "/v1/topk":
                    self.send_error(404)
                    return
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    payload = json.loads(self.rfile.read(length))
                    prefix = payload["prefix"]
                    k = int(payload["k"])
                except (ValueError, KeyError):
                    self.send_error(400, "bad request body")
                    return
                if stub.mode == "slow":
                    time.sleep(stub.delay_s)
                if stub.mode == "http_error":
                    self.send_error(500, "stub failure")
                    return
                if stub.mode == "malformed":
                    body = b"this is not json {"
                elif stub.mode == "missing_fields":
                    body = json.dumps({"log_base": stub.log_base}).encode()
                else:
                    candidates = [
                        {"token": tok, "logprob": lp}
                        for tok, lp in stub.responder(prefix, k)
                    ]
                    body = json.dumps(
                        {"log_base": stub.log_base, "candidates": candidates}
                    ).encode()
                try:
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (e.g. timed out); nothing to do

            def log_message(self, *args):  # quiet
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubLmServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def language_model_responder(lm, k_cap: Optional[int] = None):
    """Adapt a local LanguageModel into a stub responder.

    Prefix texts are resolved through the model's vocabulary; unresolvable
    prefixes score as if unseen (empty-prefix context is never wrong for
    the fixture models used in tests).
    """

    def respond(prefix_texts: List[str], k: int) -> List[Tuple[str, float]]:
        vocab = lm.vocabulary
        ids = []
        for text in prefix_texts:
            if text == "</s>":
                ids.append(vocab.eos_id)
                continue
            word_initial = text.startswith("▁")
            stripped = text[1:] if word_initial else text
            token_id = vocab.id_of(stripped, word_initial)
            if token_id is not None:
                ids.append(token_id)
        if k_cap is not None:
            k = min(k, k_cap)
        return [
            (vocab.surface(c.token_id), c.log_prob)
            for c in lm.top_k(tuple(ids), k)
        ]

    return respond
