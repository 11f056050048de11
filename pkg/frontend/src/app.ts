/** DOM wiring: chat pane, viewport, animation list, usage meter. */

import { GatewayConnection } from "./connection";
import { DragSession } from "./drag";
import { interpolateObjects } from "./interpolation";
import type { WireMessage } from "./protocol";
import { SceneView } from "./scene3d";
import {
  connectionChanged,
  initialState,
  recordUserText,
  reduce,
  ViewState,
} from "./viewmodel";

const DEFAULT_URL = `ws://${location.hostname || "127.0.0.1"}:7781`;

let state: ViewState = initialState();
let lastSnapshotAt = performance.now();

const el = (id: string) => document.getElementById(id)!;
const canvas = el("viewport") as HTMLCanvasElement;
const view = new SceneView(canvas);

const connection = new GatewayConnection(
  new URLSearchParams(location.search).get("gateway") ?? DEFAULT_URL,
  {
    onMessage(message: WireMessage) {
      if (message.type === "snapshot") lastSnapshotAt = performance.now();
      state = reduce(state, message);
      renderPanels();
    },
    onStateChange(connectionState) {
      state = connectionChanged(state, connectionState);
      renderPanels();
    },
  },
);
connection.connect();

const drag = new DragSession((outgoing) => {
  connection.send(outgoing.type, outgoing.body);
});

// -- viewport interaction ----------------------------------------------------

canvas.addEventListener("pointerdown", (event) => {
  const hit = view.pickGrabbable(event.clientX, event.clientY);
  if (hit) {
    view.orbitEnabled = false;
    drag.begin(hit.name, hit.point);
    canvas.setPointerCapture(event.pointerId);
  }
});

canvas.addEventListener("pointermove", (event) => {
  if (!drag.dragging) return;
  const point = view.dragPoint(event.clientX, event.clientY);
  if (point) drag.move(point);
});

canvas.addEventListener("pointerup", (event) => {
  if (!drag.dragging) return;
  drag.end(view.dragPoint(event.clientX, event.clientY));
  view.orbitEnabled = true;
  canvas.releasePointerCapture(event.pointerId);
});

// -- chat input ---------------------------------------------------------------

const input = el("chat-input") as HTMLInputElement;
const sendButton = el("chat-send") as HTMLButtonElement;

function sendRequest(text: string): void {
  const trimmed = text.trim();
  if (!trimmed || state.requestInFlight) return;
  if (connection.send("user_request", { text: trimmed })) {
    state = recordUserText(state, trimmed);
    input.value = "";
    renderPanels();
  }
}

sendButton.addEventListener("click", () => sendRequest(input.value));
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") sendRequest(input.value);
});

// -- panels --------------------------------------------------------------------

function renderPanels(): void {
  const banner = el("banner");
  banner.dataset.state = state.connection;
  banner.textContent =
    state.connection === "open"
      ? `connected · session ${state.sessionId}`
      : state.connection === "connecting"
        ? "connecting…"
        : "connection lost – retrying…";

  const chat = el("chat-log");
  chat.innerHTML = "";
  for (const entry of state.chat.slice(-80)) {
    const div = document.createElement("div");
    div.className = `chat-entry ${entry.role}`;
    div.textContent = entry.text;
    chat.appendChild(div);
  }
  chat.scrollTop = chat.scrollHeight;
  sendButton.disabled = state.requestInFlight
    || state.connection !== "open";

  const list = el("animations");
  list.innerHTML = "";
  for (const anim of state.snapshot?.animations ?? []) {
    const row = document.createElement("div");
    row.className = "anim-row";
    const label = document.createElement("span");
    label.textContent =
      `${anim.id} · ${anim.unit} · ${(anim.progress * 100).toFixed(0)}%`;
    const stop = document.createElement("button");
    stop.textContent = "stop";
    stop.addEventListener("click", () =>
      sendRequest(`stop animation ${anim.id}`));
    row.append(label, stop);
    list.appendChild(row);
  }
  if (!state.snapshot?.animations.length) {
    list.textContent = "(no active animations)";
  }

  el("usage").textContent =
    `${state.usage.requests} requests · ` +
    `${state.usage.inputTokens} in / ${state.usage.outputTokens} out` +
    (state.usage.lastLatencyS !== null
      ? ` · last ${state.usage.lastLatencyS.toFixed(2)}s`
      : "");

  const objects = el("objects");
  objects.innerHTML = "";
  const byId = new Map(
    (state.snapshot?.objects ?? []).map((o) => [o.id, o]));
  for (const obj of state.snapshot?.objects ?? []) {
    if (obj.tags.includes("room_proxy")) continue;
    let depth = 0;
    let parent = obj.parent;
    while (parent !== null && byId.has(parent) && depth < 8) {
      depth += 1;
      parent = byId.get(parent)!.parent;
    }
    const row = document.createElement("div");
    row.className = "object-row";
    row.textContent = `${"  ".repeat(depth)}${obj.name}` +
      (obj.grabbable ? " ✋" : "");
    objects.appendChild(row);
  }
}

// -- render loop -----------------------------------------------------------------

function frame(): void {
  if (state.snapshot) {
    const interval = state.cadence * state.timestep * 1000;
    const alpha = (performance.now() - lastSnapshotAt) / interval;
    view.sync(interpolateObjects(state.prevSnapshot, state.snapshot, alpha));
  }
  view.render();
  requestAnimationFrame(frame);
}

window.addEventListener("resize", () => view.resize());
renderPanels();
requestAnimationFrame(frame);
