/** Snapshot interpolation for smooth rendering between wire updates.
 *
 * Blends positions/scales per object id between the two most recent
 * snapshots. Alpha is clamped: the view never extrapolates past the
 * latest received tick.
 */

import type { Snapshot, SnapshotObject, Vec3 } from "./protocol";

function lerp3(a: Vec3, b: Vec3, t: number): Vec3 {
  return [
    a[0] + (b[0] - a[0]) * t,
    a[1] + (b[1] - a[1]) * t,
    a[2] + (b[2] - a[2]) * t,
  ];
}

function lerpAngle(a: number, b: number, t: number): number {
  let delta = (b - a) % 360;
  if (delta > 180) delta -= 360;
  if (delta < -180) delta += 360;
  return a + delta * t;
}

export function clampAlpha(alpha: number): number {
  if (Number.isNaN(alpha) || alpha < 0) return 0;
  return alpha > 1 ? 1 : alpha;
}

/** Interpolated object transforms keyed by object id. ``alpha`` in [0,1]
 * blends prev -> latest; objects absent from prev snap directly to the
 * latest values. */
export function interpolateObjects(
  prev: Snapshot | null,
  latest: Snapshot,
  alpha: number,
): Map<number, SnapshotObject> {
  const t = clampAlpha(alpha);
  const result = new Map<number, SnapshotObject>();
  const before = new Map<number, SnapshotObject>();
  if (prev) {
    for (const obj of prev.objects) before.set(obj.id, obj);
  }
  for (const obj of latest.objects) {
    const old = before.get(obj.id);
    if (!old || t >= 1) {
      result.set(obj.id, obj);
      continue;
    }
    result.set(obj.id, {
      ...obj,
      position: lerp3(old.position, obj.position, t),
      scale: lerp3(old.scale, obj.scale, t),
      orientation: [
        lerpAngle(old.orientation[0], obj.orientation[0], t),
        lerpAngle(old.orientation[1], obj.orientation[1], t),
        lerpAngle(old.orientation[2], obj.orientation[2], t),
      ],
    });
  }
  return result;
}
