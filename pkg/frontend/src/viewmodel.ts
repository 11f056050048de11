/** Pure view-model: UI state is a fold over the received message log.
 *
 * No scene simulation happens here; the state holds only what the wire
 * delivered (the last two snapshots are kept so the renderer can
 * interpolate between them). Frames arriving out of sequence order are
 * buffered and applied once the gap closes.
 */

import type {
  AnimationEvent,
  Snapshot,
  WireMessage,
} from "./protocol";

export type ConnectionState = "connecting" | "open" | "closed";

export interface ChatEntry {
  role: "user" | "assistant" | "warning";
  text: string;
}

export interface UsageTotals {
  requests: number;
  inputTokens: number;
  outputTokens: number;
  lastLatencyS: number | null;
}

export interface ViewState {
  connection: ConnectionState;
  sessionId: string | null;
  timestep: number;
  cadence: number;
  snapshot: Snapshot | null;
  prevSnapshot: Snapshot | null;
  chat: ChatEntry[];
  recentEvents: AnimationEvent[];
  usage: UsageTotals;
  requestInFlight: boolean;
  nextSequence: number; // next inbound sequence expected
  buffered: Map<number, WireMessage>;
}

export const MAX_EVENTS = 50;

export function initialState(): ViewState {
  return {
    connection: "connecting",
    sessionId: null,
    timestep: 0.02,
    cadence: 5,
    snapshot: null,
    prevSnapshot: null,
    chat: [],
    recentEvents: [],
    usage: { requests: 0, inputTokens: 0, outputTokens: 0,
             lastLatencyS: null },
    requestInFlight: false,
    nextSequence: 1,
    buffered: new Map(),
  };
}

/** Apply one wire message in sequence order, buffering gaps. */
export function reduce(state: ViewState, message: WireMessage): ViewState {
  if (message.sequence > state.nextSequence) {
    const buffered = new Map(state.buffered);
    buffered.set(message.sequence, message);
    return { ...state, buffered };
  }
  if (message.sequence < state.nextSequence) {
    return state; // duplicate; already applied
  }
  let next = apply(state, message);
  next = { ...next, nextSequence: state.nextSequence + 1 };
  // drain any consecutive buffered frames
  while (next.buffered.has(next.nextSequence)) {
    const queued = next.buffered.get(next.nextSequence)!;
    const buffered = new Map(next.buffered);
    buffered.delete(queued.sequence);
    next = { ...apply(next, queued), buffered,
             nextSequence: next.nextSequence + 1 };
  }
  return next;
}

function apply(state: ViewState, message: WireMessage): ViewState {
  switch (message.type) {
    case "config_ack": {
      const body = message.body as {
        session_id?: string; timestep?: number; snapshot_cadence?: number;
      };
      return {
        ...state,
        connection: "open",
        sessionId: body.session_id ?? state.sessionId,
        timestep: body.timestep ?? state.timestep,
        cadence: body.snapshot_cadence ?? state.cadence,
      };
    }
    case "snapshot": {
      const snapshot = message.body as unknown as Snapshot;
      if (state.snapshot && snapshot.tick <= state.snapshot.tick) {
        return state; // never regress
      }
      return { ...state, prevSnapshot: state.snapshot, snapshot };
    }
    case "speech": {
      const text = String(message.body.text ?? "");
      return {
        ...state,
        chat: [...state.chat, { role: "assistant", text }],
      };
    }
    case "warning": {
      const text = String(message.body.message ?? "warning");
      return {
        ...state,
        chat: [...state.chat, { role: "warning", text }],
      };
    }
    case "event": {
      const event = message.body as unknown as AnimationEvent;
      const recentEvents = [...state.recentEvents, event];
      if (recentEvents.length > MAX_EVENTS) {
        recentEvents.splice(0, recentEvents.length - MAX_EVENTS);
      }
      return { ...state, recentEvents };
    }
    case "usage": {
      const body = message.body as {
        input_tokens?: number; output_tokens?: number; latency_s?: number;
      };
      return {
        ...state,
        requestInFlight: false,
        usage: {
          requests: state.usage.requests + 1,
          inputTokens: state.usage.inputTokens + (body.input_tokens ?? 0),
          outputTokens: state.usage.outputTokens + (body.output_tokens ?? 0),
          lastLatencyS: body.latency_s ?? null,
        },
      };
    }
    default:
      return state;
  }
}

/** Local echoes that are not wire messages. */
export function recordUserText(state: ViewState, text: string): ViewState {
  return {
    ...state,
    requestInFlight: true,
    chat: [...state.chat, { role: "user", text }],
  };
}

export function connectionChanged(
  state: ViewState,
  connection: ConnectionState,
): ViewState {
  if (connection === "connecting") {
    // fresh socket, fresh sequence numbering; chat/usage persist
    return { ...state, connection, nextSequence: 1, buffered: new Map(),
             requestInFlight: false };
  }
  return { ...state, connection };
}

/** Replay a recorded wire capture; the result equals live folding. */
export function replayLog(messages: WireMessage[]): ViewState {
  let state = initialState();
  for (const message of messages) {
    state = reduce(state, message);
  }
  return state;
}
