"""Client for the neural-sidecar wire protocol.

Requests and responses are JSON objects.  Query:
``{"id", "prefix": str, "continuation": str|null, "want_entropy": bool,
"want_topk": int}`` answered by ``{"id", "logprob": float|null,
"entropy": float|null, "topk": [[token, prob], ...], "subword_count": int}``
or ``{"id", "error": str}``.  A handshake request ``{"id", "handshake":
true}`` returns ``{"id", "model": str, "protocol": int}``; the client
refuses protocol versions other than :data:`PROTOCOL_VERSION`.

Transports: ``http(s)://host:port`` (one request per POST) or
``stdio:<command>`` (line-delimited over a child process; a reader thread
correlates out-of-order responses by id, so in-flight requests may overlap).
"""

from __future__ import annotations

import itertools
import json
import shlex
import subprocess
import threading
import time
from typing import Optional, Sequence

import requests

from .corpus import detokenize
from .lm import Provider, ProviderError

PROTOCOL_VERSION = 1


class ProtocolMismatchError(ProviderError):
    def __init__(self, message: str):
        super().__init__(message, retryable=False)


class _HttpTransport:
    def __init__(self, endpoint: str, timeout: float):
        self.endpoint = endpoint
        self.timeout = timeout
        self._session = requests.Session()

    def request(self, payload: dict) -> dict:
        try:
            resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.ConnectionError, requests.Timeout) as err:
            raise ProviderError(f"sidecar unreachable: {err}", retryable=True) from err
        except (requests.RequestException, ValueError) as err:
            raise ProviderError(f"sidecar transport error: {err}", retryable=True) from err

    def close(self) -> None:
        self._session.close()


class _StdioTransport:
    """Line-delimited JSON over a child process, responses routed by id."""

    def __init__(self, command: str, timeout: float = 60.0):
        self.timeout = timeout
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._write_lock = threading.Lock()
        self._pending: dict[str, dict] = {}
        self._cond = threading.Condition()
        self._dead: Optional[str] = None
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            for line in self._proc.stdout:
                line = line.strip()
                if not line:
                    continue
                try:
                    message = json.loads(line)
                except json.JSONDecodeError:
                    continue
                with self._cond:
                    self._pending[str(message.get("id"))] = message
                    self._cond.notify_all()
        finally:
            with self._cond:
                self._dead = "sidecar process closed its stdout"
                self._cond.notify_all()

    def request(self, payload: dict) -> dict:
        timeout = self.timeout
        key = str(payload["id"])
        line = json.dumps(payload) + "\n"
        with self._write_lock:
            if self._proc.poll() is not None:
                raise ProviderError("sidecar process exited", retryable=True)
            try:
                self._proc.stdin.write(line)
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError) as err:
                raise ProviderError(f"sidecar pipe broken: {err}", retryable=True) from err
        deadline = time.monotonic() + timeout
        with self._cond:
            while key not in self._pending:
                if self._dead is not None:
                    raise ProviderError(self._dead, retryable=True)
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ProviderError("sidecar response timed out", retryable=True)
                self._cond.wait(remaining)
            return self._pending.pop(key)

    def close(self) -> None:
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)
        except Exception:
            self._proc.kill()


class SidecarClient(Provider):
    """EXTERNAL provider backed by the sidecar wire protocol."""

    kind = "external"
    tokenizer_contract = "subword"

    def __init__(self, endpoint: str, *, timeout: float = 60.0, retries: int = 2):
        self.endpoint = endpoint
        self.retries = retries
        if endpoint.startswith("stdio:"):
            self._transport = _StdioTransport(endpoint[len("stdio:") :], timeout)
        elif endpoint.startswith(("http://", "https://")):
            self._transport = _HttpTransport(endpoint, timeout)
        else:
            raise ValueError(f"unsupported sidecar endpoint: {endpoint!r}")
        self._ids = itertools.count(1)
        self._model: Optional[str] = None

    def connect(self) -> dict:
        """Handshake; verifies the protocol version and records the model id."""
        reply = self._roundtrip({"handshake": True})
        protocol = reply.get("protocol")
        if protocol != PROTOCOL_VERSION:
            raise ProtocolMismatchError(
                f"sidecar speaks protocol {protocol!r}, client requires {PROTOCOL_VERSION}"
            )
        self._model = reply.get("model")
        return reply

    def _ensure_connected(self) -> None:
        if self._model is None:
            self.connect()

    def _roundtrip(self, payload: dict) -> dict:
        payload = dict(payload, id=f"q{next(self._ids)}")
        last_error: Optional[ProviderError] = None
        for attempt in range(self.retries + 1):
            try:
                reply = self._transport.request(payload)
            except ProviderError as err:
                if not err.retryable:
                    raise
                last_error = err
                continue
            if "error" in reply:
                raise ProviderError(f"sidecar error: {reply['error']}", retryable=False)
            return reply
        raise last_error  # all attempts were retryable failures

    def _query(
        self,
        prefix_text: str,
        *,
        continuation: Optional[str],
        want_entropy: bool = False,
        want_topk: int = 0,
    ) -> dict:
        self._ensure_connected()
        return self._roundtrip(
            {
                "prefix": prefix_text,
                "continuation": continuation,
                "want_entropy": want_entropy,
                "want_topk": want_topk,
            }
        )

    def continuation_logprob(self, prefix: Sequence[str], word: str) -> float:
        if not word:
            raise ValueError("empty continuation word")
        reply = self._query(detokenize(prefix), continuation=word)
        logprob = reply.get("logprob")
        if logprob is None:
            raise ProviderError("sidecar returned no logprob", retryable=False)
        return float(logprob)

    def next_token_entropy(self, prefix: Sequence[str]) -> float:
        reply = self._query(detokenize(prefix), continuation=None, want_entropy=True)
        value = reply.get("entropy")
        if value is None:
            raise ProviderError("sidecar returned no entropy", retryable=False)
        return float(value)

    def score_with_entropy(self, prefix: Sequence[str], word: str) -> tuple[float, float]:
        """Combined query: (ln p(word|prefix), next-token entropy) in one round trip."""
        reply = self._query(detokenize(prefix), continuation=word, want_entropy=True)
        if reply.get("logprob") is None or reply.get("entropy") is None:
            raise ProviderError("sidecar returned an incomplete combined reply", retryable=False)
        return float(reply["logprob"]), float(reply["entropy"])

    def top_k(self, prefix: Sequence[str], k: int) -> list[tuple[str, float]]:
        reply = self._query(detokenize(prefix), continuation=None, want_topk=k)
        return [(tok, float(p)) for tok, p in reply.get("topk", [])]

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "tokenizer": self.tokenizer_contract,
            "endpoint": self.endpoint,
            "model": self._model,
            "protocol": PROTOCOL_VERSION,
        }

    def close(self) -> None:
        self._transport.close()
