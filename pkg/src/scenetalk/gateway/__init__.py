"""Network front door: framed TCP/WebSocket protocol, sessions, CLI."""

from .framing import WireMessage, decode_frame, encode_frame  # noqa: F401
