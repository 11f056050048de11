/** Drag-to-grab: a pointer drag over a grabbable object becomes the
 * pick -> hand_pose* -> release message sequence, emulating hand
 * tracking with a synthetic palm that follows the drag point.
 */

import type { Vec3 } from "./protocol";

export interface OutgoingBody {
  type: "pick" | "hand_pose" | "release";
  body: Record<string, unknown>;
}

export class DragSession {
  private active = false;
  private readonly hand: string;
  private readonly emit: (message: OutgoingBody) => void;
  private readonly clock: () => number;

  constructor(emit: (message: OutgoingBody) => void,
              clock: () => number = () => performance.now() / 1000,
              hand = "right") {
    this.emit = emit;
    this.clock = clock;
    this.hand = hand;
  }

  get dragging(): boolean {
    return this.active;
  }

  /** Pointer-down on a grabbable object at a world-space point. */
  begin(objectName: string, point: Vec3): void {
    if (this.active) return;
    this.active = true;
    // seed the palm at the grab point so the grip offset is zero
    this.emit({
      type: "hand_pose",
      body: this.pose(point),
    });
    this.emit({
      type: "pick",
      body: { object: objectName, hand: this.hand },
    });
  }

  /** Pointer-move while dragging. */
  move(point: Vec3): void {
    if (!this.active) return;
    this.emit({ type: "hand_pose", body: this.pose(point) });
  }

  /** Pointer-up: drop the object where it is. */
  end(point: Vec3 | null = null): void {
    if (!this.active) return;
    if (point) {
      this.emit({ type: "hand_pose", body: this.pose(point) });
    }
    this.emit({ type: "release", body: {} });
    this.active = false;
  }

  private pose(point: Vec3): Record<string, unknown> {
    return {
      hand: this.hand,
      palm_position: point,
      palm_orientation: [0, 0, 0],
      timestamp: this.clock(),
    };
  }
}
