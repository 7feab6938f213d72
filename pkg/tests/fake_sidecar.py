"""A deterministic stand-in for the neural sidecar, for client tests.

Implements the wire protocol with made-up but reproducible numbers: the
"subwords" of a continuation are 3-character chunks, each scored
-0.5 - 0.001 * len(prefix).  Run as a script for stdio mode; the handler
function is importable for in-process HTTP serving.

Flags:
  --protocol N     advertise protocol version N (default 1)
  --swap-pairs     buffer requests two at a time and answer in reversed
                   order (exercises response-id correlation)
"""

import argparse
import json
import sys

MODEL_NAME = "fake-sidecar"


def chunks(word, size=3):
    return [word[i : i + size] for i in range(0, len(word), size)] or []


def handle_request(request, protocol=1):
    rid = request.get("id")
    if request.get("handshake"):
        return {"id": rid, "model": MODEL_NAME, "protocol": protocol}
    prefix = request.get("prefix", "")
    continuation = request.get("continuation")
    reply = {"id": rid, "logprob": None, "entropy": None, "topk": [], "subword_count": 0}
    if continuation is not None:
        if continuation == "":
            return {"id": rid, "error": "empty continuation"}
        subwords = chunks(continuation)
        reply["subword_count"] = len(subwords)
        reply["logprob"] = sum(-0.5 - 0.001 * len(prefix) for _ in subwords)
    if request.get("want_entropy"):
        reply["entropy"] = 1.0 + 0.001 * len(prefix)
    k = int(request.get("want_topk") or 0)
    if k:
        reply["topk"] = [[f"tok{i}", 0.5 ** (i + 1)] for i in range(k)]
    return reply


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--protocol", type=int, default=1)
    parser.add_argument("--swap-pairs", action="store_true")
    args = parser.parse_args()

    buffered = []
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        reply = handle_request(json.loads(line), protocol=args.protocol)
        if args.swap_pairs and not json.loads(line).get("handshake"):
            buffered.append(reply)
            if len(buffered) == 2:
                for item in reversed(buffered):
                    sys.stdout.write(json.dumps(item) + "\n")
                sys.stdout.flush()
                buffered = []
            continue
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
