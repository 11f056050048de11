/** Wire protocol types: exactly the gateway's WireMessage schema. */

export type WireType =
  | "user_request"
  | "speech"
  | "snapshot"
  | "event"
  | "warning"
  | "usage"
  | "hand_pose"
  | "pick"
  | "release"
  | "config_ack";

export interface WireMessage {
  type: WireType;
  session_id: string;
  sequence: number;
  body: Record<string, unknown>;
}

export type Vec3 = [number, number, number];

export interface SnapshotObject {
  id: number;
  name: string;
  parent: number | null;
  position: Vec3;
  orientation: Vec3; // yaw, pitch, roll degrees (YXZ order)
  scale: Vec3;
  color: [number, number, number, number];
  geometry: { kind: string; prefab?: string } | null;
  physics: boolean;
  grabbable: boolean;
  visible: boolean;
  placeholder: boolean;
  tags: string[];
}

export interface Snapshot {
  tick: number;
  objects: SnapshotObject[];
  animations: { id: string; unit: string; progress: number }[];
}

export interface AnimationEvent {
  tick: number;
  id: string;
  unit: string;
  kind: string;
  subject: string;
}

export const PROXY_TAG = "room_proxy";

export function parseMessage(raw: string): WireMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const m = data as Partial<WireMessage>;
  if (
    typeof m.type !== "string" ||
    typeof m.session_id !== "string" ||
    typeof m.sequence !== "number" ||
    typeof m.body !== "object" ||
    m.body === null
  ) {
    return null;
  }
  return m as WireMessage;
}

export function encodeMessage(message: WireMessage): string {
  return JSON.stringify(message);
}
