"""Length-prefixed wire framing: 4-byte big-endian length + canonical JSON.

The same message bodies travel over raw TCP (this framing) and WebSocket
(RFC 6455 framing); only the outer layer differs.
"""

import json
import struct
from dataclasses import dataclass

from ..errors import FrameTooLarge, SchemaViolation, TruncatedFrame
from ..jsonutil import canonical_json

MAX_FRAME_BYTES = 16 * 1024 * 1024

WIRE_TYPES = (
    "user_request", "speech", "snapshot", "event", "warning", "usage",
    "hand_pose", "pick", "release", "config_ack",
)


@dataclass(frozen=True)
class WireMessage:
    type: str
    session_id: str
    sequence: int
    body: dict

    def __post_init__(self):
        if self.type not in WIRE_TYPES:
            raise SchemaViolation(f"unknown message type {self.type!r}",
                                  "$.type")
        if not isinstance(self.sequence, int) or self.sequence < 0:
            raise SchemaViolation("sequence must be a non-negative integer",
                                  "$.sequence")
        if not isinstance(self.body, dict):
            raise SchemaViolation("body must be an object", "$.body")

    def to_dict(self) -> dict:
        return {"type": self.type, "session_id": self.session_id,
                "sequence": self.sequence, "body": self.body}

    @classmethod
    def from_dict(cls, data) -> "WireMessage":
        if not isinstance(data, dict):
            raise SchemaViolation("message must be a JSON object", "$")
        for key in ("type", "session_id", "sequence", "body"):
            if key not in data:
                raise SchemaViolation("missing required field", f"$.{key}")
        if not isinstance(data["session_id"], str):
            raise SchemaViolation("session_id must be a string",
                                  "$.session_id")
        seq = data["sequence"]
        if isinstance(seq, bool) or not isinstance(seq, int):
            raise SchemaViolation("sequence must be an integer", "$.sequence")
        return cls(type=data["type"], session_id=data["session_id"],
                   sequence=seq, body=data["body"])


def message_to_json(message: WireMessage) -> str:
    return canonical_json(message.to_dict())


def message_from_json(text) -> WireMessage:
    try:
        data = json.loads(text)
    except (ValueError, TypeError) as exc:
        raise SchemaViolation(f"invalid JSON frame: {exc}", "$")
    return WireMessage.from_dict(data)


def encode_frame(message: WireMessage) -> bytes:
    payload = message_to_json(message).encode("utf-8")
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"{len(payload)} bytes exceeds "
                            f"{MAX_FRAME_BYTES} limit")
    return struct.pack(">I", len(payload)) + payload


def decode_frame(data: bytes) -> WireMessage:
    """Decode one complete frame (the exact bytes encode_frame produced)."""
    if len(data) < 4:
        raise TruncatedFrame(f"{len(data)} bytes, need at least 4")
    (length,) = struct.unpack(">I", data[:4])
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"frame announces {length} bytes")
    if len(data) < 4 + length:
        raise TruncatedFrame(f"frame announces {length} bytes, "
                             f"{len(data) - 4} present")
    return message_from_json(_decode_utf8(data[4:4 + length]))


def read_frame(sock) -> WireMessage:
    """Read one frame from a blocking socket; TruncatedFrame at EOF."""
    header = _read_exact(sock, 4)
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"frame announces {length} bytes")
    payload = _read_exact(sock, length)
    return message_from_json(_decode_utf8(payload))


def _decode_utf8(payload: bytes) -> str:
    try:
        return payload.decode("utf-8", "strict")
    except UnicodeDecodeError as exc:
        raise SchemaViolation(f"frame payload is not UTF-8: {exc}", "$")


def write_frame(sock, message: WireMessage) -> None:
    sock.sendall(encode_frame(message))


def _read_exact(sock, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining > 0:
        chunk = sock.recv(remaining)
        if not chunk:
            raise TruncatedFrame(
                f"connection closed with {remaining} bytes outstanding")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)
