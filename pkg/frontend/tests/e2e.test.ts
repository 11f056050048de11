/**
 * End-to-end: spawn the real gateway (scripted provider), speak the wire
 * protocol over WebSocket from Node, and fold every received message
 * through the production view-model. Asserts the two console-level
 * contracts: a typed request shows its object within one snapshot
 * cadence, and a drag's release leaves the object at the drop point.
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { createHash, randomBytes } from "node:crypto";
import { mkdtempSync, writeFileSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DragSession } from "../src/drag";
import type { Snapshot, WireMessage } from "../src/protocol";
import { parseMessage } from "../src/protocol";
import { initialState, reduce, ViewState } from "../src/viewmodel";

const REPO_ROOT = path.resolve(import.meta.dirname, "..", "..");
const REQUEST = "create a grabbable red cube and slide it to (1, 0.5, 1)";

const pythonOk = spawnSync("python3", ["-c", "import scenetalk"], {
  cwd: REPO_ROOT,
}).status === 0;

/** Minimal RFC 6455 client over a raw socket (masked text frames). */
class MiniWsClient {
  private socket!: net.Socket;
  private buf = Buffer.alloc(0);
  private resolvers: ((text: string | null) => void)[] = [];
  private queue: (string | null)[] = [];

  async connect(port: number): Promise<void> {
    this.socket = net.connect(port, "127.0.0.1");
    await new Promise<void>((resolve, reject) => {
      this.socket.once("connect", resolve);
      this.socket.once("error", reject);
    });
    const key = randomBytes(16).toString("base64");
    this.socket.write(
      `GET / HTTP/1.1\r\nHost: 127.0.0.1:${port}\r\n` +
      "Upgrade: websocket\r\nConnection: Upgrade\r\n" +
      `Sec-WebSocket-Key: ${key}\r\nSec-WebSocket-Version: 13\r\n\r\n`);
    await new Promise<void>((resolve, reject) => {
      const onData = (chunk: Buffer) => {
        this.buf = Buffer.concat([this.buf, chunk]);
        const end = this.buf.indexOf("\r\n\r\n");
        if (end >= 0) {
          const head = this.buf.subarray(0, end).toString("latin1");
          this.buf = this.buf.subarray(end + 4);
          this.socket.off("data", onData);
          if (!head.includes("101")) {
            reject(new Error(`handshake failed: ${head.split("\r\n")[0]}`));
            return;
          }
          const accept = createHash("sha1")
            .update(key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11")
            .digest("base64");
          if (!head.includes(accept)) {
            reject(new Error("bad Sec-WebSocket-Accept"));
            return;
          }
          this.socket.on("data", (d: Buffer) => this.onData(d));
          this.drain();
          resolve();
        }
      };
      this.socket.on("data", onData);
      this.socket.once("error", reject);
    });
    this.socket.on("close", () => this.push(null));
  }

  private onData(chunk: Buffer): void {
    this.buf = Buffer.concat([this.buf, chunk]);
    this.drain();
  }

  private drain(): void {
    for (;;) {
      if (this.buf.length < 2) return;
      const opcode = this.buf[0] & 0x0f;
      let length = this.buf[1] & 0x7f;
      let offset = 2;
      if (length === 126) {
        if (this.buf.length < 4) return;
        length = this.buf.readUInt16BE(2);
        offset = 4;
      } else if (length === 127) {
        if (this.buf.length < 10) return;
        length = Number(this.buf.readBigUInt64BE(2));
        offset = 10;
      }
      if (this.buf.length < offset + length) return;
      const payload = this.buf.subarray(offset, offset + length);
      this.buf = this.buf.subarray(offset + length);
      if (opcode === 0x1) this.push(payload.toString("utf8"));
      if (opcode === 0x8) this.push(null);
    }
  }

  private push(text: string | null): void {
    const resolver = this.resolvers.shift();
    if (resolver) resolver(text);
    else this.queue.push(text);
  }

  next(timeoutMs = 8000): Promise<string | null> {
    if (this.queue.length) {
      return Promise.resolve(this.queue.shift()!);
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for a frame")), timeoutMs);
      this.resolvers.push((text) => {
        clearTimeout(timer);
        resolve(text);
      });
    });
  }

  sendText(text: string): void {
    const payload = Buffer.from(text, "utf8");
    const mask = randomBytes(4);
    const masked = Buffer.from(payload.map((b, i) => b ^ mask[i % 4]));
    let header: Buffer;
    if (payload.length < 126) {
      header = Buffer.from([0x81, 0x80 | payload.length]);
    } else {
      header = Buffer.alloc(4);
      header[0] = 0x81;
      header[1] = 0x80 | 126;
      header.writeUInt16BE(payload.length, 2);
    }
    this.socket.write(Buffer.concat([header, mask, masked]));
  }

  close(): void {
    this.socket?.destroy();
  }
}

describe.skipIf(!pythonOk)("console against the live gateway", () => {
  const wsPort = 15000 + (process.pid % 10000);
  let server: ChildProcess;
  let client: MiniWsClient;
  let state: ViewState;
  let outSeq = 0;
  let sessionId = "";

  function send(type: WireMessage["type"],
                body: Record<string, unknown>): void {
    outSeq += 1;
    client.sendText(JSON.stringify(
      { type, session_id: sessionId, sequence: outSeq, body }));
  }

  /** Receive one message and fold it through the view-model. */
  async function step(timeoutMs = 8000): Promise<WireMessage> {
    const raw = await client.next(timeoutMs);
    if (raw === null) throw new Error("connection closed");
    const message = parseMessage(raw);
    if (!message) throw new Error(`unparseable frame: ${raw}`);
    state = reduce(state, message);
    return message;
  }

  async function stepUntil(
    predicate: (m: WireMessage) => boolean, limit = 600,
  ): Promise<WireMessage> {
    for (let i = 0; i < limit; i++) {
      const message = await step();
      if (predicate(message)) return message;
    }
    throw new Error("predicate never satisfied");
  }

  beforeAll(async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "scenetalk-ui-"));
    const config = {
      listen: { host: "127.0.0.1", port: wsPort + 1 },
      websocket: { host: "127.0.0.1", port: wsPort },
      provider: {
        kind: "scripted",
        transcript: path.join(REPO_ROOT, "fixtures", "tasks",
                              "ui_e2e.transcript.json"),
      },
      prefabs: path.join(REPO_ROOT, "fixtures", "prefabs.json"),
      timestep: 0.02,
      snapshot_cadence: 5,
    };
    const configPath = path.join(dir, "config.json");
    writeFileSync(configPath, JSON.stringify(config));
    server = spawn("python3",
                   ["-m", "scenetalk.gateway.cli", "serve",
                    "--config", configPath],
                   { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] });
    // poll until the websocket listener accepts the handshake
    client = new MiniWsClient();
    const deadline = Date.now() + 15000;
    for (;;) {
      try {
        await client.connect(wsPort);
        break;
      } catch {
        if (Date.now() > deadline) throw new Error("gateway never came up");
        client.close();
        client = new MiniWsClient();
        await new Promise((r) => setTimeout(r, 250));
      }
    }
    state = initialState();
    const hello = await step();
    expect(hello.type).toBe("config_ack");
    sessionId = state.sessionId!;
  }, 30000);

  afterAll(() => {
    client?.close();
    server?.kill("SIGTERM");
  });

  function cubeIn(snapshot: Snapshot | null): boolean {
    return !!snapshot?.objects.some((o) => o.name === "drag_cube");
  }

  it("renders the typed request's cube within one snapshot cadence",
     async () => {
    send("user_request", { text: REQUEST });
    let lastWithout: number | null = null;
    const withCube = await stepUntil((m) => {
      if (m.type === "snapshot" && !cubeIn(state.snapshot)) {
        lastWithout = (m.body as unknown as Snapshot).tick;
      }
      return m.type === "snapshot" && cubeIn(state.snapshot);
    });
    const tick = (withCube.body as unknown as Snapshot).tick;
    if (lastWithout !== null) {
      expect(tick - lastWithout).toBe(state.cadence);
    }
    // speech and usage arrive on the same wire
    await stepUntil((m) => m.type === "usage");
    expect(state.usage.requests).toBe(1);
    expect(state.chat.some((c) => c.role === "assistant")).toBe(true);
  }, 20000);

  it("shows the slide animation progressing and completing", async () => {
    await stepUntil((m) =>
      m.type === "event" && (m.body as { kind?: string }).kind === "completed");
    await stepUntil((m) => m.type === "snapshot");
    const cube = state.snapshot!.objects.find((o) => o.name === "drag_cube")!;
    expect(cube.position[0]).toBeCloseTo(1, 6);
    expect(cube.position[2]).toBeCloseTo(1, 6);
    expect(cube.grabbable).toBe(true);
  }, 20000);

  it("drag release leaves the object at the drop point within 1e-3",
     async () => {
    const cube = state.snapshot!.objects.find((o) => o.name === "drag_cube")!;
    const drop: [number, number, number] = [0.25, 1.1, 0.4];
    let clock = 10;
    const drag = new DragSession(
      (m) => send(m.type, m.body), () => (clock += 0.05));
    // grab at the cube's center so the grip offset is zero
    drag.begin("drag_cube", cube.position);
    drag.move([0.6, 0.9, 0.7]);
    drag.move([0.4, 1.0, 0.5]);
    drag.end(drop);
    const settled = await stepUntil((m) => {
      if (m.type !== "snapshot") return false;
      const seen = state.snapshot!.objects.find(
        (o) => o.name === "drag_cube");
      return !!seen && Math.hypot(
        seen.position[0] - drop[0],
        seen.position[1] - drop[1],
        seen.position[2] - drop[2]) <= 1e-3;
    });
    expect(settled.type).toBe("snapshot");
    // a few snapshots later it is still exactly where it was dropped
    await stepUntil((m) => m.type === "snapshot");
    await stepUntil((m) => m.type === "snapshot");
    const final = state.snapshot!.objects.find(
      (o) => o.name === "drag_cube")!;
    expect(Math.hypot(final.position[0] - drop[0],
                      final.position[1] - drop[1],
                      final.position[2] - drop[2])).toBeLessThanOrEqual(1e-3);
  }, 20000);
});
