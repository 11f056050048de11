"""The gateway: TCP + WebSocket listeners feeding one engine.

One engine, many sessions. Each session gets its own message history and
orchestrator; the engine loop is the only scene writer. Outbound traffic
fans out from the engine's per-tick snapshot broadcast at each session's
cadence. Sequence numbers are strictly increasing per session per
direction.
"""

import json
import logging
import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..animation import DEFAULT_TIMESTEP
from ..context import DEFAULT_HISTORY_CAPACITY, HistoryQueue
from ..creation import PrefabRegistry
from ..engine import Engine
from ..errors import (
    BindFailure,
    ConfigInvalid,
    EngineError,
    FrameTooLarge,
    SchemaViolation,
    TruncatedFrame,
)
from ..fusion import HandPose
from ..wrapper import GenericHTTP, Orchestrator, ScriptedMock
from ..wrapper.pipeline import UsageLedger
from .websocket import WsConnection
from .framing import WireMessage, message_from_json, message_to_json, \
    read_frame, write_frame

log = logging.getLogger(__name__)

DEFAULT_SNAPSHOT_CADENCE = 5


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 7780
    ws_host: Optional[str] = None
    ws_port: Optional[int] = None
    provider: dict = field(default_factory=dict)
    room_scan: Optional[str] = None
    prefabs: Optional[str] = None
    timestep: float = DEFAULT_TIMESTEP
    snapshot_cadence: int = DEFAULT_SNAPSHOT_CADENCE
    history_capacity: int = DEFAULT_HISTORY_CAPACITY
    usage_path: Optional[str] = None

    @classmethod
    def from_file(cls, path) -> "ServerConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigInvalid(f"config file not found: {path}", "$")
        except ValueError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}", "$")
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Optional[Path] = None
                  ) -> "ServerConfig":
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a JSON object", "$")
        base_dir = Path(base_dir) if base_dir is not None else Path(".")

        def resolve(value):
            p = Path(value)
            return str(p if p.is_absolute() else base_dir / p)

        config = cls()
        listen = raw.get("listen", {})
        if not isinstance(listen, dict):
            raise ConfigInvalid("listen must be an object", "$.listen")
        config.host = listen.get("host", config.host)
        config.port = _port(listen.get("port", config.port), "$.listen.port")

        wsl = raw.get("websocket")
        if wsl is not None:
            if not isinstance(wsl, dict):
                raise ConfigInvalid("websocket must be an object",
                                    "$.websocket")
            config.ws_host = wsl.get("host", "127.0.0.1")
            config.ws_port = _port(wsl.get("port"), "$.websocket.port")

        provider = raw.get("provider")
        if not isinstance(provider, dict) or "kind" not in provider:
            raise ConfigInvalid("provider.kind is required", "$.provider.kind")
        if provider["kind"] not in ("scripted", "http"):
            raise ConfigInvalid(
                f"unknown provider kind {provider['kind']!r}",
                "$.provider.kind")
        if "api_key" in provider:
            raise ConfigInvalid(
                "API keys belong in the environment (api_key_env), "
                "never in the config file", "$.provider.api_key")
        if provider["kind"] == "scripted":
            if not provider.get("transcript"):
                raise ConfigInvalid("scripted provider needs a transcript "
                                    "path", "$.provider.transcript")
            provider = {**provider, "transcript":
                        resolve(provider["transcript"])}
        else:
            for key in ("endpoint", "model"):
                if not provider.get(key):
                    raise ConfigInvalid(f"http provider needs {key}",
                                        f"$.provider.{key}")
        config.provider = provider

        for key in ("room_scan", "prefabs", "usage_path"):
            value = raw.get(key)
            if value is not None:
                if not isinstance(value, str):
                    raise ConfigInvalid("must be a path string", f"$.{key}")
                setattr(config, key, resolve(value))

        timestep = raw.get("timestep", config.timestep)
        if not isinstance(timestep, (int, float)) or timestep <= 0:
            raise ConfigInvalid("timestep must be > 0", "$.timestep")
        config.timestep = float(timestep)

        cadence = raw.get("snapshot_cadence", config.snapshot_cadence)
        if not isinstance(cadence, int) or cadence < 1:
            raise ConfigInvalid("snapshot_cadence must be a positive "
                                "integer", "$.snapshot_cadence")
        config.snapshot_cadence = cadence

        capacity = raw.get("history_capacity", config.history_capacity)
        if not isinstance(capacity, int) or capacity < 1:
            raise ConfigInvalid("history_capacity must be a positive "
                                "integer", "$.history_capacity")
        config.history_capacity = capacity
        return config

    def build_provider(self):
        if self.provider.get("kind") == "scripted":
            return ScriptedMock.from_file(self.provider["transcript"])
        return GenericHTTP(
            endpoint=self.provider["endpoint"],
            model=self.provider["model"],
            api_key_env=self.provider.get("api_key_env", ""),
            timeout=float(self.provider.get("timeout", 30.0)),
            structured_output=bool(self.provider.get("structured_output",
                                                     False)),
        )


def _port(value, path) -> int:
    # port 0 asks the OS for an ephemeral port (used by tests)
    if not isinstance(value, int) or not 0 <= value < 65536:
        raise ConfigInvalid(f"invalid port {value!r}", path)
    return value


class _TcpTransport:
    kind = "tcp"

    def __init__(self, sock):
        self.sock = sock

    def send(self, message: WireMessage) -> None:
        write_frame(self.sock, message)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class _WsTransport:
    kind = "ws"

    def __init__(self, conn: WsConnection):
        self.conn = conn

    def send(self, message: WireMessage) -> None:
        self.conn.send_text(message_to_json(message))

    def close(self) -> None:
        try:
            self.conn.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.conn.sock.close()


class Session:
    def __init__(self, session_id: str, transport, server: "GatewayServer"):
        self.id = session_id
        self.transport = transport
        self.cadence = server.config.snapshot_cadence
        self.orchestrator = Orchestrator(
            server.engine, server.provider,
            history=HistoryQueue(server.config.history_capacity),
            ledger=server.ledger,
            request_prefix=f"{session_id}:")
        self._seq = 0
        self._send_lock = threading.Lock()
        self._busy_lock = threading.Lock()
        self.busy = False
        self.alive = True

    def send(self, msg_type: str, body: dict) -> bool:
        with self._send_lock:
            if not self.alive:
                return False
            self._seq += 1
            message = WireMessage(type=msg_type, session_id=self.id,
                                  sequence=self._seq, body=body)
            try:
                self.transport.send(message)
                return True
            except OSError:
                self.alive = False
                return False

    def try_begin_request(self) -> bool:
        with self._busy_lock:
            if self.busy:
                return False
            self.busy = True
            return True

    def end_request(self) -> None:
        with self._busy_lock:
            self.busy = False


class GatewayServer:
    def __init__(self, config: ServerConfig, provider=None,
                 engine: Optional[Engine] = None):
        self.config = config
        prefabs = (PrefabRegistry.from_file(config.prefabs)
                   if config.prefabs else None)
        self.engine = engine if engine is not None else Engine(
            prefabs=prefabs, timestep=config.timestep,
            history_capacity=config.history_capacity)
        if config.room_scan:
            with open(config.room_scan, "r", encoding="utf-8") as fh:
                self.engine.fusion.load_room_scan(json.load(fh))
        self.provider = provider if provider is not None \
            else config.build_provider()
        self.ledger = UsageLedger()
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._session_counter = 0
        self._listeners: list = []
        self._threads: list = []
        self._stopping = threading.Event()
        self.tcp_address = None
        self.ws_address = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        """Bind listeners, start the engine loop and acceptor threads."""
        tcp = self._bind(self.config.host, self.config.port)
        self.tcp_address = tcp.getsockname()
        self._listeners.append(tcp)
        self._spawn(self._accept_loop, tcp, self._handle_tcp)
        if self.config.ws_port is not None:
            wsl = self._bind(self.config.ws_host or "127.0.0.1",
                             self.config.ws_port)
            self.ws_address = wsl.getsockname()
            self._listeners.append(wsl)
            self._spawn(self._accept_loop, wsl, self._handle_ws)
        self.engine.on_snapshot(self._broadcast)
        self.engine.start()
        log.info("gateway listening on %s (ws: %s)", self.tcp_address,
                 self.ws_address)

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stopping.wait(0.5):
                pass
        except KeyboardInterrupt:
            pass
        finally:
            self.shutdown()

    def shutdown(self) -> None:
        self._stopping.set()
        self.engine.stop()
        for listener in self._listeners:
            try:
                listener.close()
            except OSError:
                pass
        with self._sessions_lock:
            sessions = list(self.sessions.values())
        for session in sessions:
            session.alive = False
            session.transport.close()
        for thread in self._threads:
            thread.join(timeout=2.0)
        self._flush_usage()

    def _flush_usage(self) -> None:
        if not self.config.usage_path:
            return
        with open(self.config.usage_path, "w", encoding="utf-8") as fh:
            json.dump(self.ledger.dump(), fh, indent=1)
        log.info("usage ledger flushed to %s", self.config.usage_path)

    @staticmethod
    def _bind(host: str, port: int):
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((host, port))
            sock.listen(16)
        except OSError as exc:
            sock.close()
            raise BindFailure(f"cannot bind {host}:{port}: {exc}")
        # a blocked accept() is not reliably woken by close(); poll instead
        sock.settimeout(0.25)
        return sock

    def _spawn(self, fn, *args) -> None:
        thread = threading.Thread(target=fn, args=args, daemon=True)
        thread.start()
        self._threads.append(thread)

    # -- connection handling ---------------------------------------------------

    def _accept_loop(self, listener, handler) -> None:
        while not self._stopping.is_set():
            try:
                conn, _addr = listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.settimeout(None)
            self._spawn(handler, conn)

    def _register(self, transport) -> Session:
        with self._sessions_lock:
            self._session_counter += 1
            session = Session(f"s{self._session_counter}", transport, self)
        # hello goes out before the session joins the broadcast fan-out so
        # config_ack is always the first message a client sees
        session.send("config_ack", {
            "session_id": session.id,
            "snapshot_cadence": session.cadence,
            "timestep": self.engine.timestep,
            "tick": self.engine.tick_count,
        })
        with self._sessions_lock:
            self.sessions[session.id] = session
        return session

    def _unregister(self, session: Session) -> None:
        session.alive = False
        with self._sessions_lock:
            self.sessions.pop(session.id, None)
        session.transport.close()

    def _handle_tcp(self, conn) -> None:
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        session = self._register(_TcpTransport(conn))
        try:
            while session.alive and not self._stopping.is_set():
                try:
                    message = read_frame(conn)
                except SchemaViolation as exc:
                    session.send("warning", {"message": f"bad frame: {exc}"})
                    continue  # framing is still in sync: length was valid
                except (FrameTooLarge, TruncatedFrame, OSError):
                    return
                self._route(session, message)
        finally:
            self._unregister(session)

    def _handle_ws(self, raw_sock) -> None:
        conn = WsConnection(raw_sock)
        try:
            if not conn.handshake():
                raw_sock.close()
                return
        except OSError:
            raw_sock.close()
            return
        session = self._register(_WsTransport(conn))
        try:
            while session.alive and not self._stopping.is_set():
                try:
                    text = conn.recv_text()
                except (TruncatedFrame, OSError):
                    return
                if text is None:
                    return
                try:
                    message = message_from_json(text)
                except SchemaViolation as exc:
                    session.send("warning",
                                 {"message": f"bad message: {exc}"})
                    continue
                self._route(session, message)
        finally:
            self._unregister(session)

    # -- routing -------------------------------------------------------------

    def _route(self, session: Session, message: WireMessage) -> None:
        body = message.body
        if message.type == "user_request":
            text = body.get("text")
            if not isinstance(text, str) or not text.strip():
                session.send("warning",
                             {"message": "user_request needs body.text"})
                return
            if not session.try_begin_request():
                session.send("warning", {
                    "message": "a request is already in flight for this "
                               "session"})
                return
            self._spawn(self._run_request, session, text)
        elif message.type == "hand_pose":
            self._apply_hand_pose(session, body)
        elif message.type == "pick":
            try:
                self.engine.call(self.engine.fusion.pick,
                                 body.get("object"),
                                 body.get("hand", "right"))
            except EngineError as exc:
                session.send("warning", {"message": f"pick failed: {exc}"})
        elif message.type == "release":
            try:
                self.engine.call(self.engine.fusion.release,
                                 body.get("object"))
            except EngineError as exc:
                session.send("warning", {"message": f"release failed: {exc}"})
        elif message.type == "config_ack":
            cadence = body.get("snapshot_cadence")
            if isinstance(cadence, int) and cadence >= 1:
                session.cadence = cadence
            session.send("config_ack", {
                "session_id": session.id,
                "snapshot_cadence": session.cadence,
                "timestep": self.engine.timestep,
                "tick": self.engine.tick_count,
            })
        else:
            session.send("warning", {
                "message": f"unexpected client message type "
                           f"{message.type!r}"})

    def _apply_hand_pose(self, session: Session, body: dict) -> None:
        try:
            if "bones" in body:
                pose = HandPose(
                    hand=body["hand"],
                    palm_position=tuple(body["palm_position"]),
                    palm_orientation=tuple(body.get("palm_orientation",
                                                    (0.0, 0.0, 0.0))),
                    bones={k: tuple(v) for k, v in body["bones"].items()},
                    timestamp=float(body["timestamp"]),
                )
            else:
                pose = HandPose.synthetic(
                    hand=body["hand"],
                    palm_position=tuple(body["palm_position"]),
                    palm_orientation=tuple(body.get("palm_orientation",
                                                    (0.0, 0.0, 0.0))),
                    timestamp=float(body["timestamp"]),
                )
        except (KeyError, TypeError, ValueError) as exc:
            session.send("warning", {"message": f"bad hand_pose: {exc}"})
            return
        self.engine.call(self.engine.fusion.update_hand_pose, pose)

    def _run_request(self, session: Session, text: str) -> None:
        try:
            result = session.orchestrator.handle_request(text)
            for line in result.speech:
                session.send("speech", {"text": line,
                                        "request_id": result.request_id})
            for warning in result.warnings:
                session.send("warning", {"message": warning,
                                         "request_id": result.request_id})
            usage = dict(result.usage)
            usage["latency_s"] = result.elapsed_s
            usage["outcomes"] = result.outcomes
            session.send("usage", usage)
        except Exception as exc:  # defensive: a session must never die silently
            log.exception("request handling failed")
            session.send("warning", {"message": f"internal error: {exc}"})
        finally:
            session.end_request()

    # -- outbound fan-out ----------------------------------------------------

    def _broadcast(self, snapshot: dict, events: list) -> None:
        with self._sessions_lock:
            sessions = list(self.sessions.values())
        tick = snapshot["tick"]
        for session in sessions:
            if not session.alive:
                continue
            for event in events:
                session.send("event", event)
            if tick % session.cadence == 0:
                session.send("snapshot", snapshot)
