"""Request dispatch for the wire protocol.

Query: {"id", "prefix": str, "continuation": str|null, "want_entropy":
bool, "want_topk": int} -> {"id", "logprob": float|null, "entropy":
float|null, "topk": [[token, prob], ...], "subword_count": int}.
Handshake: {"id", "handshake": true} -> {"id", "model", "protocol"}.
Failures come back as {"id", "error": str}; the server never dies on a
bad request.
"""

from __future__ import annotations

from .scoring import ProtocolError, ScoringModel

PROTOCOL_VERSION = 1


def handle_request(request: dict, model: ScoringModel, model_name: str) -> dict:
    rid = request.get("id") if isinstance(request, dict) else None
    try:
        if not isinstance(request, dict):
            raise ProtocolError("request must be a JSON object")
        if request.get("handshake"):
            return {"id": rid, "model": model_name, "protocol": PROTOCOL_VERSION}
        prefix = request.get("prefix")
        continuation = request.get("continuation")
        want_entropy = bool(request.get("want_entropy"))
        want_topk = int(request.get("want_topk") or 0)
        reply = {
            "id": rid,
            "logprob": None,
            "entropy": None,
            "topk": [],
            "subword_count": 0,
        }
        if continuation is not None:
            logprob, count = model.score(prefix, continuation)
            reply["logprob"] = logprob
            reply["subword_count"] = count
        if want_entropy or want_topk:
            entropy, topk = model.distribution(prefix, want_entropy, want_topk)
            reply["entropy"] = entropy
            reply["topk"] = topk
        return reply
    except ProtocolError as err:
        return {"id": rid, "error": str(err)}
    except Exception as err:  # keep serving whatever a request throws
        return {"id": rid, "error": f"internal error: {err}"}
