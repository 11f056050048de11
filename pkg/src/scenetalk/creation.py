"""Object creation: prefab registry, creation specs, placement rules.

Creation commands (already schema-validated) become CreationSpecs and are
applied to the scene atomically. Sources are either registry prefabs
(preferred when the requested name fuzzily matches) or unit primitives.
A post-processing pass snaps physics-enabled objects onto the nearest
supporting surface and clamps them inside its footprint.
"""

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from . import kernels as K
from .errors import (
    MissingSource,
    SchemaViolation,
    UnknownPrefab,
)
from .fusion import default_spawn_position
from .scene import (
    DEFAULT_COLOR,
    Geometry,
    PRIMITIVE_KINDS,
    Scene,
    Transform,
    Vec3,
)

log = logging.getLogger(__name__)

PREFAB_SCHEMA_VERSION = 1

NAMED_COLORS = {
    "red": (1.0, 0.1, 0.1, 1.0),
    "green": (0.1, 0.8, 0.1, 1.0),
    "blue": (0.1, 0.2, 1.0, 1.0),
    "yellow": (1.0, 0.9, 0.1, 1.0),
    "orange": (1.0, 0.55, 0.1, 1.0),
    "purple": (0.6, 0.2, 0.8, 1.0),
    "cyan": (0.1, 0.9, 0.9, 1.0),
    "magenta": (0.9, 0.1, 0.9, 1.0),
    "pink": (1.0, 0.6, 0.75, 1.0),
    "brown": (0.55, 0.35, 0.15, 1.0),
    "white": (1.0, 1.0, 1.0, 1.0),
    "black": (0.05, 0.05, 0.05, 1.0),
    "gray": (0.5, 0.5, 0.5, 1.0),
    "grey": (0.5, 0.5, 0.5, 1.0),
}

# prefabs with any of these tags default to physics=true (they should sit
# on surfaces); everything else defaults to physics=false
PHYSICS_DEFAULT_TAGS = frozenset({"furniture", "supply"})

SUPPORT_TAG = "surface"
MAX_SUPPORT_DROP_M = 10.0
SUPPORT_TOLERANCE_M = 1e-3


def parse_color(value) -> tuple:
    if isinstance(value, str):
        try:
            return NAMED_COLORS[value.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown color name {value!r}")
    vals = tuple(float(x) for x in value)
    if len(vals) == 3:
        vals = vals + (1.0,)
    if len(vals) != 4:
        raise ValueError(f"color must be RGB(A): {value!r}")
    return tuple(min(1.0, max(0.0, v)) for v in vals)


def _as_scale(value) -> Vec3:
    if isinstance(value, (int, float)):
        return (float(value),) * 3
    return tuple(float(x) for x in value)


def _squash(name: str) -> str:
    return "".join(c for c in name.lower() if c.isalnum())


@dataclass(frozen=True)
class PrefabPart:
    primitive: str
    local_position: Vec3
    local_euler: Vec3
    local_scale: Vec3
    color: tuple
    parent: Optional[int] = None  # index of an earlier part; None = root


@dataclass(frozen=True)
class Prefab:
    name: str
    tags: frozenset
    default_scale: Vec3
    parts: tuple


class PrefabRegistry:
    """Catalog of composite geometry descriptors loadable from JSON."""

    def __init__(self, prefabs: Iterable[Prefab] = ()):
        self._entries: dict[str, Prefab] = {}
        for prefab in prefabs:
            if prefab.name in self._entries:
                raise SchemaViolation(
                    f"duplicate prefab name {prefab.name!r}", "$.prefabs")
            self._entries[prefab.name] = prefab

    @classmethod
    def from_file(cls, path) -> "PrefabRegistry":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_dict(cls, document: dict) -> "PrefabRegistry":
        if not isinstance(document, dict):
            raise SchemaViolation("prefab registry must be a JSON object", "$")
        version = document.get("schema_version")
        if version != PREFAB_SCHEMA_VERSION:
            raise SchemaViolation(
                f"unsupported schema_version {version!r}", "$.schema_version")
        entries = document.get("prefabs")
        if not isinstance(entries, list):
            raise SchemaViolation("missing prefabs array", "$.prefabs")
        prefabs = []
        for i, entry in enumerate(entries):
            prefabs.append(cls._parse_prefab(entry, f"$.prefabs[{i}]"))
        return cls(prefabs)

    @staticmethod
    def _parse_prefab(entry, path) -> Prefab:
        if not isinstance(entry, dict):
            raise SchemaViolation("prefab entry must be an object", path)
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise SchemaViolation("prefab needs a non-empty name",
                                  f"{path}.name")
        tags = entry.get("tags", [])
        if not isinstance(tags, list) or not all(isinstance(t, str)
                                                 for t in tags):
            raise SchemaViolation("tags must be strings", f"{path}.tags")
        raw_parts = entry.get("parts")
        if not isinstance(raw_parts, list) or not raw_parts:
            raise SchemaViolation("prefab needs at least one part",
                                  f"{path}.parts")
        parts = []
        for j, part in enumerate(raw_parts):
            ppath = f"{path}.parts[{j}]"
            if not isinstance(part, dict):
                raise SchemaViolation("part must be an object", ppath)
            primitive = part.get("primitive")
            if primitive not in PRIMITIVE_KINDS:
                raise SchemaViolation(
                    f"primitive must be one of {PRIMITIVE_KINDS}",
                    f"{ppath}.primitive")
            parent = part.get("parent")
            if parent is not None and (not isinstance(parent, int)
                                       or not 0 <= parent < j):
                raise SchemaViolation(
                    "part parent must index an earlier part",
                    f"{ppath}.parent")
            try:
                parts.append(PrefabPart(
                    primitive=primitive,
                    local_position=tuple(map(float, part.get(
                        "local_position", (0.0, 0.0, 0.0)))),
                    local_euler=tuple(map(float, part.get(
                        "local_euler", (0.0, 0.0, 0.0)))),
                    local_scale=tuple(map(float, part.get(
                        "local_scale", (1.0, 1.0, 1.0)))),
                    color=parse_color(part.get("color", DEFAULT_COLOR)),
                    parent=parent,
                ))
            except (TypeError, ValueError) as exc:
                raise SchemaViolation(str(exc), ppath)
        return Prefab(
            name=name,
            tags=frozenset(tags),
            default_scale=_as_scale(entry.get("default_scale", 1.0)),
            parts=tuple(parts),
        )

    def names(self) -> list:
        return sorted(self._entries)

    def get(self, name: str) -> Prefab:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownPrefab(f"prefab {name!r} not in registry")

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def fuzzy_match(self, requested: str) -> Optional[str]:
        """Deterministic case-insensitive substring match (separators
        ignored): exact name first, then the shortest overlapping entry,
        alphabetical on ties."""
        wanted = _squash(requested)
        if not wanted:
            return None
        candidates = []
        for name in self._entries:
            squashed = _squash(name)
            if squashed == wanted:
                return name
            if squashed in wanted or wanted in squashed:
                candidates.append(name)
        if not candidates:
            return None
        candidates.sort(key=lambda n: (len(n), n))
        return candidates[0]


@dataclass(frozen=True)
class CreationSpec:
    name: str
    prefab: Optional[str] = None
    primitive: Optional[str] = None
    position: Optional[Vec3] = None
    orientation: Optional[Vec3] = None
    scale: Optional[Vec3] = None
    color: Optional[tuple] = None
    parent: Optional[str] = None
    physics: Optional[bool] = None
    grabbable: bool = False
    frame: str = "world"

    def __post_init__(self):
        if (self.prefab is None) == (self.primitive is None):
            raise MissingSource(
                f"spec {self.name!r} needs exactly one of prefab/primitive")
        if self.frame not in ("world", "local"):
            raise ValueError(f"frame must be world|local: {self.frame!r}")
        if self.frame == "local" and self.parent is None:
            raise ValueError(
                f"spec {self.name!r} uses local frame but has no parent")


@dataclass(frozen=True)
class Adjustment:
    """One support-enforcement correction applied to a physics object."""

    object_id: int
    name: str
    kind: str  # "snapped" | "clamped" | "grounded"
    moved_from: Vec3
    moved_to: Vec3
    support: Optional[str]
    support_top: float

    def to_dict(self) -> dict:
        return {
            "object": self.name,
            "kind": self.kind,
            "from": list(self.moved_from),
            "to": list(self.moved_to),
            "support": self.support,
            "support_top": self.support_top,
        }


class ObjectCreator:
    """Interprets creation commands against a scene and a prefab registry."""

    def __init__(self, scene: Scene, prefabs: Optional[PrefabRegistry] = None,
                 user=None):
        self.scene = scene
        self.prefabs = prefabs if prefabs is not None else PrefabRegistry()
        self.user = user

    # -- command interpretation ---------------------------------------------

    def interpret_creation(self, command: dict) -> list:
        """Validated creation JSON -> ordered CreationSpecs (parents first)."""
        if isinstance(command, dict) and "objects" in command:
            entries = command["objects"]
        elif isinstance(command, dict):
            entries = [command]
        else:
            entries = list(command)
        specs = []
        for entry in entries:
            specs.append(self._interpret_entry(entry))
        return specs

    def _interpret_entry(self, entry: dict) -> CreationSpec:
        name = entry.get("name")
        if not name:
            raise MissingSource("creation entry is missing a name")
        prefab = None
        primitive = entry.get("primitive")
        requested = entry.get("prefab")
        if requested:
            prefab = self.prefabs.fuzzy_match(requested)
            if prefab is None:
                if primitive:
                    log.warning("prefab %r not in registry; using primitive %r",
                                requested, primitive)
                else:
                    raise UnknownPrefab(
                        f"prefab {requested!r} not in registry and no "
                        "primitive fallback given")
            else:
                primitive = None
        if prefab is None and primitive is None:
            raise MissingSource(f"entry {name!r} has neither prefab nor "
                                "primitive")
        if primitive is not None and primitive not in PRIMITIVE_KINDS:
            raise MissingSource(f"unknown primitive {primitive!r}")
        return CreationSpec(
            name=name,
            prefab=prefab,
            primitive=primitive,
            position=(tuple(map(float, entry["position"]))
                      if entry.get("position") is not None else None),
            orientation=(tuple(map(float, entry["orientation"]))
                         if entry.get("orientation") is not None else None),
            scale=(_as_scale(entry["scale"])
                   if entry.get("scale") is not None else None),
            color=(parse_color(entry["color"])
                   if entry.get("color") is not None else None),
            parent=entry.get("parent"),
            physics=entry.get("physics"),
            grabbable=bool(entry.get("grabbable", False)),
            frame=entry.get("frame", "world"),
        )

    # -- application ---------------------------------------------------------

    def apply(self, specs: list) -> list:
        """Insert all specs into the scene, or nothing on any failure."""
        created: list[int] = []
        try:
            for spec in specs:
                created.extend(self._apply_spec(spec))
        except Exception:
            for object_id in reversed(created):
                if object_id in self.scene:
                    self.scene.destroy_object(object_id)
            raise
        return created

    def _apply_spec(self, spec: CreationSpec) -> list:
        if spec.prefab is not None:
            return self._apply_prefab(spec)
        return [self._apply_primitive(spec)]

    def _default_position(self, spec: CreationSpec) -> Vec3:
        if spec.parent is not None:
            return (0.0, 0.0, 0.0)
        if self.user is not None:
            return default_spawn_position(self.user)
        return (0.0, 0.0, 0.0)

    def _insert(self, spec: CreationSpec, geometry, scale, color,
                physics, tags) -> int:
        position = spec.position if spec.position is not None \
            else self._default_position(spec)
        orientation = spec.orientation if spec.orientation is not None \
            else (0.0, 0.0, 0.0)
        object_id = self.scene.add_object(
            name=spec.name,
            transform=Transform(position=position, euler=orientation,
                                scale=scale),
            parent=spec.parent,
            color=color,
            geometry=geometry,
            physics=physics,
            grabbable=spec.grabbable,
            tags=tags,
        )
        if spec.parent is not None and spec.frame == "world":
            # values were world-space: rebase onto the parent
            parent_id = self.scene.get(object_id).parent
            if spec.position is not None:
                self.scene.set_world_position(object_id, position)
            if spec.orientation is not None:
                self.scene.set_world_rotation(
                    object_id, K.euler_to_mat3(*orientation))
            pscale = self.scene.world_scale(parent_id)
            self.scene.update_transform(object_id, scale=tuple(
                s / p for s, p in zip(scale, pscale)))
        return object_id

    def _apply_primitive(self, spec: CreationSpec) -> int:
        return self._insert(
            spec,
            geometry=Geometry(spec.primitive),
            scale=spec.scale if spec.scale is not None else (1.0, 1.0, 1.0),
            color=spec.color if spec.color is not None else DEFAULT_COLOR,
            physics=spec.physics if spec.physics is not None else False,
            tags=(),
        )

    def _apply_prefab(self, spec: CreationSpec) -> list:
        prefab = self.prefabs.get(spec.prefab)
        physics = spec.physics if spec.physics is not None \
            else bool(prefab.tags & PHYSICS_DEFAULT_TAGS)
        root_id = self._insert(
            spec,
            geometry=Geometry("prefab", prefab=prefab.name),
            scale=spec.scale if spec.scale is not None
            else prefab.default_scale,
            color=spec.color if spec.color is not None else DEFAULT_COLOR,
            physics=physics,
            tags=prefab.tags,
        )
        created = [root_id]
        root_name = self.scene.get(root_id).name
        for i, part in enumerate(prefab.parts):
            parent_id = root_id if part.parent is None \
                else created[part.parent + 1]
            part_id = self.scene.add_object(
                name=f"{root_name}_part_{i + 1}",
                transform=Transform(position=part.local_position,
                                    euler=part.local_euler,
                                    scale=part.local_scale),
                parent=parent_id,
                color=part.color if spec.color is None else spec.color,
                geometry=Geometry(part.primitive),
            )
            created.append(part_id)
        return created

    # -- support enforcement --------------------------------------------------

    def enforce_support(self, created: Iterable[int],
                        proxies: Iterable = ()) -> list:
        """Snap physics objects onto supports; see Adjustment for outcomes.

        Placeholder objects and physics-disabled objects are never touched.
        """
        surfaces = self._support_surfaces(proxies)
        adjustments = []
        for object_id in created:
            if object_id not in self.scene:
                continue
            obj = self.scene.get(object_id)
            if not obj.physics or obj.is_placeholder:
                continue
            adjustment = self._support_one(obj, surfaces)
            if adjustment is not None:
                adjustments.append(adjustment)
        return adjustments

    def _support_surfaces(self, proxies) -> list:
        surfaces = []
        for proxy in proxies:
            surfaces.append({
                "key": proxy.id,
                "top": proxy.top,
                "cx": proxy.center[0],
                "cz": proxy.center[2],
                "hx": proxy.extents[0],
                "hz": proxy.extents[2],
            })
        for obj in self.scene.objects():
            if SUPPORT_TAG not in obj.tags:
                continue
            box = self.scene.world_aabb(obj.id)
            if box is None:
                continue
            lo, hi = box
            surfaces.append({
                "key": obj.name,
                "owner": obj.id,
                "top": hi[1],
                "cx": (lo[0] + hi[0]) * 0.5,
                "cz": (lo[2] + hi[2]) * 0.5,
                "hx": (hi[0] - lo[0]) * 0.5,
                "hz": (hi[2] - lo[2]) * 0.5,
            })
        return surfaces

    def _descendants(self, object_id: int) -> set:
        seen = set()
        stack = [object_id]
        while stack:
            oid = stack.pop()
            seen.add(oid)
            stack.extend(self.scene.children_of(oid))
        return seen

    def _support_one(self, obj, surfaces) -> Optional[Adjustment]:
        box = self.scene.world_aabb(obj.id)
        if box is None:
            return None
        lo, hi = box
        bottom = lo[1]
        cx = (lo[0] + hi[0]) * 0.5
        cz = (lo[2] + hi[2]) * 0.5
        cy = (lo[1] + hi[1]) * 0.5
        own_hx = (hi[0] - lo[0]) * 0.5
        own_hz = (hi[2] - lo[2]) * 0.5
        family = self._descendants(obj.id)

        eligible = [s for s in surfaces
                    if s.get("owner") not in family
                    and s["top"] <= cy
                    and bottom - s["top"] <= MAX_SUPPORT_DROP_M]

        containing = [s for s in eligible
                      if abs(cx - s["cx"]) <= s["hx"]
                      and abs(cz - s["cz"]) <= s["hz"]]
        if containing:
            support = max(containing, key=lambda s: s["top"])
            if abs(bottom - support["top"]) <= SUPPORT_TOLERANCE_M:
                return None
            return self._move(obj, dx=0.0, dz=0.0,
                              dy=support["top"] - bottom,
                              kind="snapped", support=support)

        def clamp_target(s):
            ihx = max(s["hx"] - own_hx, 0.0)
            ihz = max(s["hz"] - own_hz, 0.0)
            tx = min(max(cx, s["cx"] - ihx), s["cx"] + ihx)
            tz = min(max(cz, s["cz"] - ihz), s["cz"] + ihz)
            return tx, tz

        def clamp_distance(s):
            tx, tz = clamp_target(s)
            return ((cx - tx) ** 2 + (cz - tz) ** 2) ** 0.5

        reachable = [s for s in eligible
                     if clamp_distance(s) <= MAX_SUPPORT_DROP_M]
        if reachable:
            support = min(reachable,
                          key=lambda s: (clamp_distance(s), -s["top"]))
            tx, tz = clamp_target(support)
            return self._move(obj, dx=tx - cx, dz=tz - cz,
                              dy=support["top"] - bottom,
                              kind="clamped", support=support)

        # nothing to rest on within range: settle on the world ground plane
        if abs(bottom) <= SUPPORT_TOLERANCE_M:
            return None
        log.warning("no support below %r within %.0f m; dropping to ground",
                    obj.name, MAX_SUPPORT_DROP_M)
        return self._move(obj, dx=0.0, dz=0.0, dy=-bottom,
                          kind="grounded", support=None)

    def _move(self, obj, dx, dy, dz, kind, support) -> Adjustment:
        start = self.scene.world_position(obj.id)
        target = (start[0] + dx, start[1] + dy, start[2] + dz)
        self.scene.set_world_position(obj.id, target)
        return Adjustment(
            object_id=obj.id,
            name=obj.name,
            kind=kind,
            moved_from=start,
            moved_to=target,
            support=None if support is None else support["key"],
            support_top=0.0 if support is None else support["top"],
        )
