"""Transports: line-delimited JSON over stdio, or one request per HTTP POST.

Requests are stateless and independently answerable; a lock serializes
model calls so concurrent requests never batch together or mix outputs.
The stdio transport keeps stdout protocol-only (logs go to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .protocol import handle_request
from .scoring import ScoringModel, SidecarConfig


def serve_stdio(model: ScoringModel, model_name: str) -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as err:
            reply = {"id": None, "error": f"invalid JSON: {err}"}
        else:
            reply = handle_request(request, model, model_name)
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


def make_http_server(model: ScoringModel, model_name: str, port: int) -> ThreadingHTTPServer:
    lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                request = json.loads(self.rfile.read(length))
            except json.JSONDecodeError as err:
                reply = {"id": None, "error": f"invalid JSON: {err}"}
            else:
                with lock:
                    reply = handle_request(request, model, model_name)
            body = json.dumps(reply).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default=SidecarConfig.model,
                        help="model identifier or local path")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--transport", choices=["stdio", "http"], default="stdio")
    parser.add_argument("--port", type=int, default=SidecarConfig.port)
    args = parser.parse_args(argv)

    import transformers

    transformers.utils.logging.disable_progress_bar()
    transformers.utils.logging.set_verbosity_error()
    print(f"loading {args.model} on {args.device} ...", file=sys.stderr)
    model = ScoringModel(args.model, device=args.device)
    print("ready", file=sys.stderr)

    if args.transport == "stdio":
        serve_stdio(model, args.model)
    else:
        server = make_http_server(model, args.model, args.port)
        print(f"listening on http://127.0.0.1:{server.server_port}/", file=sys.stderr)
        server.serve_forever()


if __name__ == "__main__":
    main()
