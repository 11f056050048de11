/** WebSocket wrapper: sequence-numbered sends, reconnect with backoff.
 *
 * On reconnect the server assigns a new session id; chat history and
 * usage totals live in the view model, so the session resumes visually
 * without losing anything the user saw.
 */

import { encodeMessage, parseMessage, WireMessage, WireType } from "./protocol";

export interface ConnectionHandlers {
  onMessage: (message: WireMessage) => void;
  onStateChange: (state: "connecting" | "open" | "closed") => void;
}

export class GatewayConnection {
  private url: string;
  private socket: WebSocket | null = null;
  private handlers: ConnectionHandlers;
  private sequence = 0;
  private sessionId = "";
  private closed = false;
  private retryDelayMs = 500;

  constructor(url: string, handlers: ConnectionHandlers) {
    this.url = url;
    this.handlers = handlers;
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.handlers.onStateChange("connecting");
    this.sequence = 0;
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retryDelayMs = 500;
    };
    socket.onmessage = (event: MessageEvent) => {
      const message = parseMessage(String(event.data));
      if (!message) return;
      if (message.type === "config_ack" && message.body.session_id) {
        this.sessionId = String(message.body.session_id);
        this.handlers.onStateChange("open");
      }
      this.handlers.onMessage(message);
    };
    socket.onclose = () => {
      this.handlers.onStateChange("closed");
      if (!this.closed) {
        setTimeout(() => this.open(), this.retryDelayMs);
        this.retryDelayMs = Math.min(this.retryDelayMs * 2, 8000);
      }
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  send(type: WireType, body: Record<string, unknown>): boolean {
    if (!this.socket || this.socket.readyState !== WebSocket.OPEN) {
      return false;
    }
    this.sequence += 1;
    this.socket.send(encodeMessage({
      type,
      session_id: this.sessionId,
      sequence: this.sequence,
      body,
    }));
    return true;
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
