"""Serve a causal LM behind the sidecar wire protocol."""

from .protocol import PROTOCOL_VERSION, handle_request
from .scoring import ProtocolError, ScoringModel, SidecarConfig

__all__ = [
    "PROTOCOL_VERSION",
    "ProtocolError",
    "ScoringModel",
    "SidecarConfig",
    "handle_request",
]
