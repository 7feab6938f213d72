import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

import fake_sidecar
from thatdrop.lm import ProviderError, UnsupportedQueryError
from thatdrop.sidecar_client import ProtocolMismatchError, SidecarClient

FAKE = Path(__file__).parent / "fake_sidecar.py"


def stdio_endpoint(*flags):
    return "stdio:" + " ".join([sys.executable, str(FAKE), *flags])


@pytest.fixture
def client():
    c = SidecarClient(stdio_endpoint())
    yield c
    c.close()


class TestStdioTransport:
    def test_handshake(self, client):
        reply = client.connect()
        assert reply["model"] == "fake-sidecar"
        assert reply["protocol"] == 1
        assert client.describe()["model"] == "fake-sidecar"

    def test_logprob_matches_fake_model(self, client):
        # prefix "I've seen" (9 chars), "office" -> 2 chunks of 3
        value = client.continuation_logprob(["I", "'ve", "seen"], "office")
        assert value == pytest.approx(2 * (-0.5 - 0.001 * len("I've seen")), abs=1e-12)

    def test_entropy_roundtrip(self, client):
        assert client.next_token_entropy(["hi"]) == pytest.approx(1.0 + 0.002, abs=1e-12)

    def test_combined_query(self, client):
        logprob, entropy = client.score_with_entropy(["hi"], "cat")
        assert logprob == pytest.approx(-0.5 - 0.002, abs=1e-12)
        assert entropy == pytest.approx(1.002, abs=1e-12)

    def test_prefix_is_detokenized(self, client):
        # clitic reattachment changes the prefix length the fake model sees
        with_clitic = client.next_token_entropy(["I", "'ve"])
        assert with_clitic == pytest.approx(1.0 + 0.001 * len("I've"), abs=1e-12)

    def test_empty_word_rejected_client_side(self, client):
        with pytest.raises(ValueError, match="empty continuation"):
            client.continuation_logprob(["x"], "")

    def test_server_side_error_surfaces(self, client):
        client.connect()
        reply = client._roundtrip({"prefix": "x", "continuation": "abc", "want_entropy": False, "want_topk": 0})
        assert reply["logprob"] is not None
        with pytest.raises(ProviderError, match="empty continuation"):
            client._roundtrip({"prefix": "x", "continuation": "", "want_entropy": False, "want_topk": 0})

    def test_full_distribution_unsupported(self, client):
        with pytest.raises(UnsupportedQueryError):
            client.next_token_distribution(["x"])

    def test_topk_sorted(self, client):
        pairs = client.top_k(["x"], 4)
        probs = [p for _, p in pairs]
        assert probs == sorted(probs, reverse=True)
        assert sum(probs) <= 1.0

    def test_out_of_order_replies_matched_by_id(self):
        client = SidecarClient(stdio_endpoint("--swap-pairs"))
        try:
            client.connect()
            with ThreadPoolExecutor(max_workers=2) as pool:
                futures = [
                    pool.submit(client.continuation_logprob, ["ab"], "x"),
                    pool.submit(client.continuation_logprob, ["abcd"], "x"),
                ]
                short, longer = [f.result(timeout=10) for f in futures]
            assert short == pytest.approx(-0.5 - 0.002, abs=1e-12)
            assert longer == pytest.approx(-0.5 - 0.004, abs=1e-12)
        finally:
            client.close()

    def test_protocol_mismatch_refused(self):
        client = SidecarClient(stdio_endpoint("--protocol", "2"))
        try:
            with pytest.raises(ProtocolMismatchError):
                client.connect()
        finally:
            client.close()

    def test_dead_process_is_retryable(self):
        client = SidecarClient("stdio:" + sys.executable + " -c pass")
        try:
            with pytest.raises(ProviderError) as err:
                client.connect()
            assert err.value.retryable
        finally:
            client.close()


class _Handler(BaseHTTPRequestHandler):
    protocol_override = 1

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        request = json.loads(self.rfile.read(length))
        reply = fake_sidecar.handle_request(request, protocol=self.protocol_override)
        body = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/"
    server.shutdown()


class TestHttpTransport:
    def test_roundtrip(self, http_endpoint):
        client = SidecarClient(http_endpoint)
        reply = client.connect()
        assert reply["protocol"] == 1
        assert client.continuation_logprob(["ab"], "cat") == pytest.approx(-0.502, abs=1e-12)

    def test_concurrent_requests(self, http_endpoint):
        client = SidecarClient(http_endpoint)
        client.connect()
        with ThreadPoolExecutor(max_workers=8) as pool:
            values = list(pool.map(lambda i: client.next_token_entropy(["x" * i]), range(16)))
        assert values == [pytest.approx(1.0 + 0.001 * i, abs=1e-12) for i in range(16)]

    def test_unreachable_endpoint_retryable(self):
        client = SidecarClient("http://127.0.0.1:9/", timeout=0.2, retries=1)
        with pytest.raises(ProviderError) as err:
            client.connect()
        assert err.value.retryable


def test_bad_endpoint_scheme_rejected():
    with pytest.raises(ValueError):
        SidecarClient("ftp://nope")
