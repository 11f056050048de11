"""Server-side WebSocket (RFC 6455) over blocking sockets.

Just enough protocol for the browser UI: the HTTP upgrade handshake,
masked client frames in, unmasked text frames out, ping/pong, close.
Message bodies are the same canonical JSON the TCP listener speaks.
"""

import base64
import hashlib
import struct

from ..errors import TruncatedFrame

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_WS_PAYLOAD = 16 * 1024 * 1024


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


class WsConnection:
    """One server-side connection; buffers bytes that arrive early so a
    frame sent right behind the upgrade request is never lost."""

    def __init__(self, sock):
        self.sock = sock
        self._buf = b""

    # -- handshake ---------------------------------------------------------

    def handshake(self) -> bool:
        """Server side of the upgrade. False if not a WebSocket request."""
        while b"\r\n\r\n" not in self._buf:
            chunk = self.sock.recv(4096)
            if not chunk:
                return False
            self._buf += chunk
            if len(self._buf) > 65536:
                return False
        head, _, self._buf = self._buf.partition(b"\r\n\r\n")
        headers = {}
        for line in head.decode("latin-1").split("\r\n")[1:]:
            if ":" in line:
                name, _, value = line.partition(":")
                headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if key is None or "websocket" not in headers.get("upgrade",
                                                         "").lower():
            self.sock.sendall(b"HTTP/1.1 400 Bad Request\r\n"
                              b"Content-Length: 0\r\n\r\n")
            return False
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
            "\r\n"
        )
        self.sock.sendall(response.encode("latin-1"))
        return True

    # -- receive -----------------------------------------------------------

    def _read_exact(self, count: int) -> bytes:
        while len(self._buf) < count:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise TruncatedFrame("websocket peer closed mid-frame")
            self._buf += chunk
        data, self._buf = self._buf[:count], self._buf[count:]
        return data

    def _read_frame(self):
        b1, b2 = self._read_exact(2)
        fin = bool(b1 & 0x80)
        opcode = b1 & 0x0F
        masked = bool(b2 & 0x80)
        length = b2 & 0x7F
        if length == 126:
            (length,) = struct.unpack(">H", self._read_exact(2))
        elif length == 127:
            (length,) = struct.unpack(">Q", self._read_exact(8))
        if length > MAX_WS_PAYLOAD:
            raise TruncatedFrame(f"websocket frame too large: {length}")
        mask = self._read_exact(4) if masked else b""
        payload = self._read_exact(length) if length else b""
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return fin, opcode, payload

    def recv_text(self):
        """Next text message, transparently handling ping and continuation.
        Returns None once the peer closes."""
        buffered = b""
        while True:
            fin, opcode, payload = self._read_frame()
            if opcode == OP_CLOSE:
                try:
                    self.send_frame(OP_CLOSE, b"")
                except OSError:
                    pass
                return None
            if opcode == OP_PING:
                self.send_frame(OP_PONG, payload)
                continue
            if opcode == OP_PONG:
                continue
            if opcode in (OP_TEXT, OP_BINARY, OP_CONT):
                buffered += payload
                if fin:
                    return buffered.decode("utf-8", "replace")

    # -- send ----------------------------------------------------------------

    def send_frame(self, opcode: int, payload: bytes) -> None:
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 65536:
            header += bytes([126]) + struct.pack(">H", n)
        else:
            header += bytes([127]) + struct.pack(">Q", n)
        self.sock.sendall(header + payload)

    def send_text(self, text: str) -> None:
        self.send_frame(OP_TEXT, text.encode("utf-8"))
