"""Reality fusion: room-scan proxies, hand poses, interaction blocks.

Scanned real-world objects arrive as a JSON room-scan document (the
platform-neutral stand-in for a headset scene API) and become invisible,
tagged scene objects plus RoomProxy records used for support checks and
context sections. Hand poses stream in as latest-value mailboxes; objects
can be made grabbable or anchored to follow a palm.

Proxy footprints are treated axis-aligned for support math (yaw is kept
as data but ignored there), matching the engine-wide AABB approximation.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from . import kernels as K
from .context import PROXY_TAG
from .errors import NotFound, SchemaViolation, UnknownBlock
from .scene import Geometry, Scene, Transform, Vec3

log = logging.getLogger(__name__)

ROOM_SCAN_SCHEMA_VERSION = 1

FINGERS = ("thumb", "index", "middle", "ring", "pinky")
BONE_SEGMENTS = ("proximal", "intermediate", "distal")
BONE_NAMES = ("wrist",) + tuple(
    f"{finger}_{segment}" for finger in FINGERS for segment in BONE_SEGMENTS)

# where content appears when no position is given: 1.5 m ahead of the
# head on the horizontal plane, 0.3 m below eye height
SPAWN_AHEAD_M = 1.5
SPAWN_DROP_M = 0.3


@dataclass(frozen=True)
class RoomProxy:
    id: str
    generic_name: str
    tags: frozenset
    center: Vec3
    extents: Vec3  # half sizes
    yaw_deg: float
    kind: str  # "plane" | "volume"

    @property
    def top(self) -> float:
        return self.center[1] + self.extents[1]

    def footprint_contains(self, x: float, z: float) -> bool:
        return (abs(x - self.center[0]) <= self.extents[0]
                and abs(z - self.center[2]) <= self.extents[2])


@dataclass(frozen=True)
class HandPose:
    hand: str
    palm_position: Vec3
    palm_orientation: Vec3  # yaw-pitch-roll degrees
    bones: dict  # bone name -> position, all 16 entries
    timestamp: float

    def __post_init__(self):
        if self.hand not in ("left", "right"):
            raise ValueError(f"hand must be left/right: {self.hand!r}")
        missing = set(BONE_NAMES) - set(self.bones)
        if missing:
            raise ValueError(f"hand pose missing bones: {sorted(missing)}")

    @classmethod
    def synthetic(cls, hand, palm_position, palm_orientation=(0.0, 0.0, 0.0),
                  timestamp=0.0) -> "HandPose":
        """Plausible pose with all 16 bones laid out around the palm; used
        by tests and the UI's pointer-drag hand emulation."""
        px, py, pz = palm_position
        bones = {"wrist": (px, py, pz - 0.04)}
        for i, finger in enumerate(FINGERS):
            dx = (i - 2) * 0.02
            for j, segment in enumerate(BONE_SEGMENTS):
                bones[f"{finger}_{segment}"] = (
                    px + dx, py, pz + 0.04 + 0.025 * (j + 1))
        return cls(hand=hand, palm_position=tuple(map(float, palm_position)),
                   palm_orientation=tuple(map(float, palm_orientation)),
                   bones=bones, timestamp=float(timestamp))


class UserContext:
    """Head pose plus the latest pose per hand. The head defaults to the
    origin facing +Z so the engine works without any tracker feed."""

    def __init__(self):
        self.head_position: Vec3 = (0.0, 1.6, 0.0)
        self.head_euler: Vec3 = (0.0, 0.0, 0.0)
        self._hands: dict[str, HandPose] = {}

    def set_head(self, position, euler=(0.0, 0.0, 0.0)) -> None:
        self.head_position = tuple(map(float, position))
        self.head_euler = tuple(map(float, euler))

    def hand(self, hand: str) -> Optional[HandPose]:
        return self._hands.get(hand)

    def store_hand(self, pose: HandPose) -> None:
        self._hands[pose.hand] = pose


def default_spawn_position(user: UserContext) -> Vec3:
    """Default placement for new content: in front of the user's head."""
    fwd = K.euler_to_mat3(*user.head_euler)
    fx, fz = fwd[2], fwd[8]  # forward projected to the horizontal plane
    norm = math.hypot(fx, fz)
    if norm < 1e-9:
        fx, fz = 0.0, 1.0
    else:
        fx, fz = fx / norm, fz / norm
    hx, hy, hz = user.head_position
    return (hx + fx * SPAWN_AHEAD_M, hy - SPAWN_DROP_M, hz + fz * SPAWN_AHEAD_M)


def _require(doc, key, kind, path):
    if key not in doc:
        raise SchemaViolation("missing required field", f"{path}.{key}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaViolation(
            f"expected {kind.__name__}, got {type(value).__name__}",
            f"{path}.{key}")
    return value


def _vec3_field(doc, key, path):
    value = _require(doc, key, list, path)
    if len(value) != 3 or not all(isinstance(x, (int, float)) for x in value):
        raise SchemaViolation("expected a 3-number array", f"{path}.{key}")
    return tuple(float(x) for x in value)


def parse_room_scan(document: dict) -> list:
    """Validate a room-scan document and return its RoomProxy list."""
    if not isinstance(document, dict):
        raise SchemaViolation("room scan must be a JSON object", "$")
    version = _require(document, "schema_version", int, "$")
    if version != ROOM_SCAN_SCHEMA_VERSION:
        raise SchemaViolation(
            f"unsupported schema_version {version}", "$.schema_version")
    entries = _require(document, "proxies", list, "$")
    proxies = []
    seen_ids = set()
    volume_count = 0
    plane_count = 0
    for i, entry in enumerate(entries):
        path = f"$.proxies[{i}]"
        if not isinstance(entry, dict):
            raise SchemaViolation("proxy entry must be an object", path)
        proxy_id = _require(entry, "id", str, path)
        if proxy_id in seen_ids:
            raise SchemaViolation(f"duplicate proxy id {proxy_id!r}",
                                  f"{path}.id")
        seen_ids.add(proxy_id)
        kind = _require(entry, "kind", str, path)
        if kind not in ("plane", "volume"):
            raise SchemaViolation(f"kind must be plane|volume, got {kind!r}",
                                  f"{path}.kind")
        tags = _require(entry, "tags", list, path)
        if not all(isinstance(t, str) for t in tags):
            raise SchemaViolation("tags must be strings", f"{path}.tags")
        center = _vec3_field(entry, "center", path)
        extents = _vec3_field(entry, "extents", path)
        if any(e < 0 for e in extents):
            raise SchemaViolation("extents must be non-negative",
                                  f"{path}.extents")
        if kind == "plane" and extents[1] != 0.0:
            raise SchemaViolation("planes must have zero vertical extent",
                                  f"{path}.extents")
        yaw = entry.get("yaw_deg", 0.0)
        if not isinstance(yaw, (int, float)):
            raise SchemaViolation("yaw_deg must be a number", f"{path}.yaw_deg")
        if kind == "volume":
            volume_count += 1
            generic = f"invisible volume {volume_count}"
        else:
            plane_count += 1
            generic = f"invisible plane {plane_count}"
        proxies.append(RoomProxy(
            id=proxy_id,
            generic_name=generic,
            tags=frozenset(tags),
            center=center,
            extents=extents,
            yaw_deg=float(yaw),
            kind=kind,
        ))
    return proxies


@dataclass
class FollowConstraint:
    object_id: int
    hand: str
    offset: Vec3


class FusionEngine:
    """Owns room proxies, user tracking and interaction building blocks."""

    def __init__(self, scene: Scene, user: Optional[UserContext] = None):
        self.scene = scene
        self.user = user if user is not None else UserContext()
        self.proxies: list[RoomProxy] = []
        self._follows: list[FollowConstraint] = []
        self._grabs: dict[int, Optional[int]] = {}  # object -> previous parent
        self._anchors: dict[str, int] = {}
        scene.on_destroy(self._forget_object)

    # -- room scan -------------------------------------------------------

    def load_room_scan(self, document: dict) -> list:
        """Insert proxies from a parsed room-scan document into the scene."""
        proxies = parse_room_scan(document)
        for proxy in proxies:
            if proxy.kind == "volume":
                geometry = Geometry("cube")
                scale = tuple(max(2.0 * e, 1e-6) for e in proxy.extents)
            else:
                geometry = Geometry("plane")
                scale = (max(2.0 * proxy.extents[0], 1e-6), 1.0,
                         max(2.0 * proxy.extents[2], 1e-6))
            self.scene.add_object(
                name=proxy.generic_name,
                transform=Transform(position=proxy.center,
                                    euler=(proxy.yaw_deg, 0.0, 0.0),
                                    scale=scale),
                geometry=geometry,
                visible=False,
                tags=set(proxy.tags) | {PROXY_TAG},
            )
            self.proxies.append(proxy)
        return proxies

    def resolve_real_anchor(self, tag: str) -> RoomProxy:
        """Tagged proxy nearest to the user's head."""
        matches = [p for p in self.proxies if tag in p.tags]
        if not matches:
            raise NotFound(f"no scanned object tagged {tag!r}")
        head = self.user.head_position
        matches.sort(key=lambda p: (K.v_dist(p.center, head), p.id))
        return matches[0]

    # -- hand tracking -----------------------------------------------------

    def update_hand_pose(self, pose: HandPose) -> bool:
        """Store the latest pose; stale timestamps are dropped with a warning."""
        current = self.user.hand(pose.hand)
        if current is not None and pose.timestamp < current.timestamp:
            log.warning("stale %s-hand pose dropped (%.3f < %.3f)",
                        pose.hand, pose.timestamp, current.timestamp)
            return False
        self.user.store_hand(pose)
        return True

    # -- building blocks ---------------------------------------------------

    def attach_building_block(self, ref, block: str, hand: str = "right",
                              offset=(0.0, 0.0, 0.0)) -> None:
        object_id = self.scene.id_of(ref)
        if block == "grabbable":
            self.scene.get(object_id).grabbable = True
        elif block == "hand_follow":
            if hand not in ("left", "right"):
                raise UnknownBlock(f"hand must be left/right: {hand!r}")
            self._follows = [f for f in self._follows
                             if f.object_id != object_id]
            self._follows.append(FollowConstraint(
                object_id=object_id, hand=hand,
                offset=tuple(map(float, offset))))
        else:
            raise UnknownBlock(f"unknown building block {block!r}")

    def apply_constraints(self) -> None:
        """Per-tick pass placing followers at palm + rotated offset (or the
        default head-forward spot before any pose arrives)."""
        for constraint in self._follows:
            pose = self.user.hand(constraint.hand)
            if pose is None:
                target = default_spawn_position(self.user)
            else:
                rot = K.euler_to_mat3(*pose.palm_orientation)
                target = K.v_add(pose.palm_position,
                                 K.mat3_apply(rot, constraint.offset))
            self.scene.set_world_position(constraint.object_id, target)
        for hand, anchor_id in self._anchors.items():
            pose = self.user.hand(hand)
            if pose is not None:
                self.scene.set_world_position(anchor_id, pose.palm_position)
                self.scene.set_world_rotation(
                    anchor_id, K.euler_to_mat3(*pose.palm_orientation))

    # -- grabbing (pick / release from clients) -----------------------------

    def _hand_anchor(self, hand: str) -> int:
        if hand not in self._anchors:
            pose = self.user.hand(hand)
            position = (pose.palm_position if pose is not None
                        else default_spawn_position(self.user))
            self._anchors[hand] = self.scene.add_object(
                name=f"hand_anchor_{hand}",
                transform=Transform(position=position),
                visible=False,
                tags={"hand_anchor"},
            )
        return self._anchors[hand]

    def pick(self, ref, hand: str = "right") -> int:
        """Grab: reparent a grabbable object under the hand anchor."""
        object_id = self.scene.id_of(ref)
        obj = self.scene.get(object_id)
        if not obj.grabbable:
            raise UnknownBlock(f"object {obj.name!r} is not grabbable")
        if object_id in self._grabs:
            return object_id
        self._grabs[object_id] = obj.parent
        self.scene.set_parent(object_id, self._hand_anchor(hand),
                              preserve_world=True)
        return object_id

    def release(self, ref=None) -> Optional[int]:
        """Let go: restore the grabbed object's previous parent."""
        if ref is None:
            if not self._grabs:
                return None
            object_id = next(iter(self._grabs))
        else:
            object_id = self.scene.id_of(ref)
            if object_id not in self._grabs:
                return None
        previous = self._grabs.pop(object_id)
        if previous is not None and previous not in self.scene:
            previous = None
        self.scene.set_parent(object_id, previous, preserve_world=True)
        return object_id

    def is_constrained(self, object_id: int) -> bool:
        """Grabbed or palm-following; such objects ignore support checks."""
        return (object_id in self._grabs
                or any(f.object_id == object_id for f in self._follows))

    def _forget_object(self, obj) -> None:
        self._follows = [f for f in self._follows if f.object_id != obj.id]
        self._grabs.pop(obj.id, None)
        for hand, anchor in list(self._anchors.items()):
            if anchor == obj.id:
                del self._anchors[hand]
