import { describe, expect, it } from "vitest";

import { DragSession, OutgoingBody } from "../src/drag";

function collector() {
  const sent: OutgoingBody[] = [];
  let now = 1.0;
  const session = new DragSession((m) => sent.push(m), () => (now += 0.05));
  return { sent, session };
}

describe("drag session", () => {
  it("emits pick -> hand_pose* -> release with monotone timestamps", () => {
    const { sent, session } = collector();
    session.begin("drag_cube", [0.5, 0.5, 0.5]);
    session.move([0.6, 0.5, 0.5]);
    session.move([0.7, 0.6, 0.5]);
    session.end([0.8, 0.7, 0.5]);

    expect(sent.map((m) => m.type)).toEqual([
      "hand_pose", "pick", "hand_pose", "hand_pose", "hand_pose", "release",
    ]);
    const pick = sent[1];
    expect(pick.body).toEqual({ object: "drag_cube", hand: "right" });
    const stamps = sent.filter((m) => m.type === "hand_pose")
      .map((m) => m.body.timestamp as number);
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i]).toBeGreaterThan(stamps[i - 1]);
    }
    // the palm seeds at the grab point, so the grip offset is zero and
    // the final pose equals the drop point
    const last = sent[sent.length - 2];
    expect(last.body.palm_position).toEqual([0.8, 0.7, 0.5]);
  });

  it("ignores moves when not dragging and double begins", () => {
    const { sent, session } = collector();
    session.move([1, 1, 1]);
    expect(sent).toHaveLength(0);
    session.begin("a", [0, 0, 0]);
    session.begin("b", [9, 9, 9]); // ignored: already dragging
    session.end();
    expect(sent.filter((m) => m.type === "pick")).toHaveLength(1);
    expect(sent[1].body.object).toBe("a");
    expect(sent[sent.length - 1].type).toBe("release");
    expect(session.dragging).toBe(false);
  });
});
