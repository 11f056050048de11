import { describe, expect, it } from "vitest";

import { clampAlpha, interpolateObjects } from "../src/interpolation";
import type { Snapshot, SnapshotObject } from "../src/protocol";

function obj(id: number, position: [number, number, number],
             orientation: [number, number, number] = [0, 0, 0],
): SnapshotObject {
  return {
    id, name: `o${id}`, parent: null, position, orientation,
    scale: [1, 1, 1], color: [1, 1, 1, 1],
    geometry: { kind: "cube" }, physics: false, grabbable: false,
    visible: true, placeholder: false, tags: [],
  };
}

function snap(tick: number, objects: SnapshotObject[]): Snapshot {
  return { tick, objects, animations: [] };
}

describe("snapshot interpolation", () => {
  it("blends positions at the midpoint", () => {
    const prev = snap(5, [obj(1, [0, 0, 0])]);
    const latest = snap(10, [obj(1, [2, 0, 4])]);
    const mid = interpolateObjects(prev, latest, 0.5).get(1)!;
    expect(mid.position).toEqual([1, 0, 2]);
  });

  it("never extrapolates beyond the latest tick", () => {
    const prev = snap(5, [obj(1, [0, 0, 0])]);
    const latest = snap(10, [obj(1, [2, 0, 0])]);
    const late = interpolateObjects(prev, latest, 3.7).get(1)!;
    expect(late.position).toEqual([2, 0, 0]);
    expect(clampAlpha(99)).toBe(1);
    expect(clampAlpha(-1)).toBe(0);
    expect(clampAlpha(Number.NaN)).toBe(0);
  });

  it("snaps objects that were not in the previous snapshot", () => {
    const prev = snap(5, []);
    const latest = snap(10, [obj(2, [3, 1, 0])]);
    const shown = interpolateObjects(prev, latest, 0.2).get(2)!;
    expect(shown.position).toEqual([3, 1, 0]);
  });

  it("drops objects that disappeared from the latest snapshot", () => {
    const prev = snap(5, [obj(1, [0, 0, 0])]);
    const latest = snap(10, []);
    expect(interpolateObjects(prev, latest, 0.5).size).toBe(0);
  });

  it("takes the short way around angle wraps", () => {
    const prev = snap(5, [obj(1, [0, 0, 0], [170, 0, 0])]);
    const latest = snap(10, [obj(1, [0, 0, 0], [-170, 0, 0])]);
    const mid = interpolateObjects(prev, latest, 0.5).get(1)!;
    expect(((mid.orientation[0] % 360) + 360) % 360).toBeCloseTo(180, 6);
  });
});
