"""Deterministic causal-LM scoring: continuation log-probabilities and
first-position next-token entropy.

A continuation word is scored as the sum of its subword log-probabilities
given the prefix (inference in single precision, sums accumulated in
float64).  The continuation gets a leading space unless the prefix already
ends in whitespace, matching how byte-level BPE vocabularies mark word
boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer


class ProtocolError(ValueError):
    """Client-visible request failure (context overflow, bad fields, ...)."""


@dataclass
class SidecarConfig:
    model: str = "facebook/opt-125m"
    device: str = "cpu"
    transport: str = "stdio"  # or "http"
    port: int = 8700


class ScoringModel:
    """One loaded model + tokenizer with the two protocol operations."""

    def __init__(self, model_id: str, device: str = "cpu"):
        self.model_id = model_id
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id)
        self.model.to(device)
        self.model.eval()
        self.max_len = getattr(self.model.config, "max_position_embeddings", None)

    @property
    def vocab_size(self) -> int:
        return int(self.model.config.vocab_size)

    def _prefix_ids(self, prefix: str) -> list[int]:
        if not isinstance(prefix, str):
            raise ProtocolError("prefix must be a string")
        ids = self.tokenizer.encode(prefix, add_special_tokens=True)
        if not ids:
            if self.tokenizer.bos_token_id is not None:
                return [self.tokenizer.bos_token_id]
            raise ProtocolError("empty prefix and the tokenizer has no BOS token")
        return ids

    def _continuation_ids(self, prefix: str, continuation: str) -> list[int]:
        if not isinstance(continuation, str):
            raise ProtocolError("continuation must be a string")
        if not continuation:
            raise ProtocolError("continuation tokenizes to an empty subword sequence")
        text = continuation if (not prefix or prefix[-1].isspace()) else " " + continuation
        ids = self.tokenizer.encode(text, add_special_tokens=False)
        if not ids:
            raise ProtocolError("continuation tokenizes to an empty subword sequence")
        return ids

    def _check_length(self, n: int) -> None:
        if self.max_len is not None and n > self.max_len:
            raise ProtocolError(f"context overflow: {n} tokens > {self.max_len}")

    @torch.no_grad()
    def score(self, prefix: str, continuation: str) -> tuple[float, int]:
        """(sum of subword log-probabilities in nats, subword count)."""
        prefix_ids = self._prefix_ids(prefix)
        cont_ids = self._continuation_ids(prefix, continuation)
        ids = prefix_ids + cont_ids
        self._check_length(len(ids))
        logits = self.model(torch.tensor([ids], device=self.device)).logits[0]
        logprobs = torch.log_softmax(logits.float(), dim=-1)
        total = 0.0
        for offset, token_id in enumerate(cont_ids):
            position = len(prefix_ids) + offset - 1  # logits predict the next token
            total += float(logprobs[position, token_id])
        return total, len(cont_ids)

    @torch.no_grad()
    def distribution(
        self, prefix: str, want_entropy: bool, want_topk: int
    ) -> tuple[float | None, list[list]]:
        """First-position next-token entropy (nats) and top-k (token, prob) pairs."""
        ids = self._prefix_ids(prefix)
        self._check_length(len(ids))
        logits = self.model(torch.tensor([ids], device=self.device)).logits[0, -1]
        logp = torch.log_softmax(logits.float(), dim=-1)
        probs = logp.exp()
        entropy = None
        if want_entropy:
            entropy = float(-(probs.double() * logp.double()).sum())
        topk: list[list] = []
        if want_topk:
            k = min(int(want_topk), self.vocab_size)
            values, indices = torch.topk(probs, k)
            tokens = self.tokenizer.convert_ids_to_tokens(indices.tolist())
            topk = [[tok, float(p)] for tok, p in zip(tokens, values)]
        return entropy, topk
