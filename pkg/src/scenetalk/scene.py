"""Scene graph: objects, hierarchy, coordinate conversion and queries.

Frame conventions live in ``kernels``: right-handed, Y up, +Z forward,
meters, yaw-pitch-roll degrees. Local transforms are stored per object;
world transforms are composed on demand down the parent chain.

World orientation/scale use the usual TRS approximation (rotations compose
as matrices, scales multiply componentwise, shear is ignored); world
positions are exact matrix-stack compositions. Bounding boxes are
axis-aligned after scale and ignore rotation, which is accurate enough for
desk-scale support checks.
"""

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from . import kernels as K
from .errors import (
    AmbiguousName,
    CycleDetected,
    DuplicateName,
    NotFound,
    UnknownObject,
    UnknownParent,
)

Vec3 = tuple
Color = tuple

PRIMITIVE_KINDS = ("cube", "sphere", "cylinder", "capsule", "plane")

DEFAULT_COLOR = (0.8, 0.8, 0.8, 1.0)  # light gray


def _vec3(v, name="vector") -> Vec3:
    try:
        x, y, z = v
    except (TypeError, ValueError):
        raise ValueError(f"{name} must have 3 components: {v!r}")
    return (float(x), float(y), float(z))


def _color(c) -> Color:
    vals = tuple(float(x) for x in c)
    if len(vals) == 3:
        vals = vals + (1.0,)
    if len(vals) != 4 or any(x < 0.0 or x > 1.0 for x in vals):
        raise ValueError(f"color must be RGBA in [0,1]: {c!r}")
    return vals


@dataclass(frozen=True)
class Transform:
    """Local transform: position (m), yaw-pitch-roll (deg), scale (>0)."""

    position: Vec3 = (0.0, 0.0, 0.0)
    euler: Vec3 = (0.0, 0.0, 0.0)
    scale: Vec3 = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        e = _vec3(self.euler, "euler")
        object.__setattr__(self, "euler", tuple(K.norm_angle_deg(a) for a in e))
        s = _vec3(self.scale, "scale")
        if any(x <= 0.0 for x in s):
            raise ValueError(f"scale components must be > 0: {s!r}")
        object.__setattr__(self, "scale", s)

    def affine(self):
        return K.trs_to_affine(self.position, self.euler, self.scale)

    def rotation(self):
        return K.euler_to_mat3(*self.euler)


@dataclass(frozen=True)
class Geometry:
    """Primitive geometry or a prefab reference.

    Primitives occupy the unit cube before scaling (the plane is flat:
    zero Y extent). A "prefab" geometry marks the root of an expanded
    composite; its bounding box is the union of its parts.
    """

    kind: str
    prefab: Optional[str] = None

    def __post_init__(self):
        if self.kind == "prefab":
            if not self.prefab:
                raise ValueError("prefab geometry needs a prefab name")
        elif self.kind not in PRIMITIVE_KINDS:
            raise ValueError(f"unknown geometry kind: {self.kind!r}")

    def half_extents(self, scale: Vec3) -> Vec3:
        if self.kind == "plane":
            return (0.5 * scale[0], 0.0, 0.5 * scale[2])
        return (0.5 * scale[0], 0.5 * scale[1], 0.5 * scale[2])

    def to_dict(self):
        d = {"kind": self.kind}
        if self.prefab is not None:
            d["prefab"] = self.prefab
        return d


@dataclass
class SceneObject:
    id: int
    name: str
    transform: Transform
    parent: Optional[int] = None
    color: Color = DEFAULT_COLOR
    geometry: Optional[Geometry] = None
    physics: bool = False
    grabbable: bool = False
    visible: bool = True
    tags: frozenset = frozenset()
    created_seq: int = 0

    @property
    def is_placeholder(self) -> bool:
        return self.geometry is None


ObjectRef = Union[int, str, dict]


class Scene:
    """Mutable scene graph. Single-writer: all mutations happen on the
    engine loop; snapshots are plain immutable data safe to share."""

    def __init__(self):
        self._objects: dict[int, SceneObject] = {}
        self._by_name: dict[str, int] = {}
        self._children: dict[int, list[int]] = {}
        self._next_id = 1
        self._seq = 0
        self._destroy_hooks = []

    # -- lookup ----------------------------------------------------------

    def __contains__(self, object_id: int) -> bool:
        return object_id in self._objects

    def __len__(self) -> int:
        return len(self._objects)

    def get(self, object_id: int) -> SceneObject:
        try:
            return self._objects[object_id]
        except KeyError:
            raise UnknownObject(f"no object with id {object_id}")

    def find_name(self, name: str) -> Optional[int]:
        return self._by_name.get(name)

    def id_of(self, ref: ObjectRef) -> int:
        """Accepts an id, a name, or a reference descriptor dict."""
        if isinstance(ref, int):
            return self.get(ref).id
        return self.resolve_reference(ref)

    def objects(self) -> Iterable[SceneObject]:
        """Objects in id order (stable across identical histories)."""
        for object_id in sorted(self._objects):
            yield self._objects[object_id]

    def children_of(self, object_id: int) -> list:
        return list(self._children.get(object_id, ()))

    # -- mutation --------------------------------------------------------

    def add_object(
        self,
        name: str,
        transform: Optional[Transform] = None,
        parent: Union[int, str, None] = None,
        color=DEFAULT_COLOR,
        geometry: Optional[Geometry] = None,
        physics: bool = False,
        grabbable: bool = False,
        visible: bool = True,
        tags: Iterable = (),
        rename_on_collision: bool = True,
    ) -> int:
        if not name or not name.strip():
            raise ValueError("object name must be non-empty")
        parent_id = None
        if parent is not None:
            if isinstance(parent, str):
                parent_id = self._by_name.get(parent)
                if parent_id is None:
                    raise UnknownParent(f"parent {parent!r} does not exist")
            else:
                if parent not in self._objects:
                    raise UnknownParent(f"parent id {parent} does not exist")
                parent_id = parent

        if name in self._by_name:
            if not rename_on_collision:
                raise DuplicateName(f"name {name!r} already in scene")
            n = 2
            while f"{name}-{n}" in self._by_name:
                n += 1
            name = f"{name}-{n}"

        object_id = self._next_id
        self._next_id += 1
        self._seq += 1
        obj = SceneObject(
            id=object_id,
            name=name,
            transform=transform if transform is not None else Transform(),
            parent=parent_id,
            color=_color(color),
            geometry=geometry,
            physics=physics,
            grabbable=grabbable,
            visible=visible,
            tags=frozenset(tags),
            created_seq=self._seq,
        )
        self._objects[object_id] = obj
        self._by_name[name] = object_id
        if parent_id is not None:
            self._children.setdefault(parent_id, []).append(object_id)
        return object_id

    def on_destroy(self, hook) -> None:
        """Register ``hook(scene_object)`` called for every removed object."""
        self._destroy_hooks.append(hook)

    def set_parent(
        self,
        child: int,
        parent: Optional[int],
        preserve_world: bool = False,
    ) -> None:
        obj = self.get(child)
        if parent is not None:
            self.get(parent)
            node = parent
            while node is not None:
                if node == child:
                    raise CycleDetected(
                        f"parenting {obj.name!r} under its descendant")
                node = self._objects[node].parent

        if preserve_world:
            world_pos = self.world_position(child)
            world_rot = self.world_rotation(child)
            world_scale = self.world_scale(child)

        if obj.parent is not None:
            self._children[obj.parent].remove(child)
        obj.parent = parent
        if parent is not None:
            self._children.setdefault(parent, []).append(child)

        if preserve_world:
            self._set_local_from_world(obj, world_pos, world_rot, world_scale)

    def _set_local_from_world(self, obj, world_pos, world_rot, world_scale):
        if obj.parent is None:
            local_pos = world_pos
            local_rot = world_rot
            local_scale = world_scale
        else:
            pm, pt = self.world_affine(obj.parent)
            im, it = K.affine_invert(pm, pt)
            local_pos = K.affine_apply(im, it, world_pos)
            prot = self.world_rotation(obj.parent)
            local_rot = K.mat3_mul(K.mat3_transpose(prot), world_rot)
            pscale = self.world_scale(obj.parent)
            local_scale = tuple(w / p for w, p in zip(world_scale, pscale))
        obj.transform = Transform(
            position=local_pos,
            euler=K.mat3_to_euler(local_rot),
            scale=local_scale,
        )

    def set_transform(self, object_id: int, transform: Transform) -> None:
        self.get(object_id).transform = transform

    def update_transform(self, object_id: int, **changes) -> None:
        obj = self.get(object_id)
        obj.transform = replace(obj.transform, **changes)

    def set_world_position(self, object_id: int, world_pos) -> None:
        obj = self.get(object_id)
        if obj.parent is None:
            local = _vec3(world_pos)
        else:
            pm, pt = self.world_affine(obj.parent)
            im, it = K.affine_invert(pm, pt)
            local = K.affine_apply(im, it, _vec3(world_pos))
        obj.transform = replace(obj.transform, position=local)

    def set_world_rotation(self, object_id: int, world_rot_mat3) -> None:
        obj = self.get(object_id)
        if obj.parent is None:
            local = world_rot_mat3
        else:
            prot = self.world_rotation(obj.parent)
            local = K.mat3_mul(K.mat3_transpose(prot), world_rot_mat3)
        obj.transform = replace(obj.transform, euler=K.mat3_to_euler(local))

    def destroy_object(self, object_id: int) -> None:
        obj = self.get(object_id)
        # splice children up to the grandparent, keeping world transforms
        for child_id in list(self._children.get(object_id, ())):
            self.set_parent(child_id, obj.parent, preserve_world=True)
        self._children.pop(object_id, None)
        if obj.parent is not None:
            self._children[obj.parent].remove(object_id)
        del self._objects[object_id]
        del self._by_name[obj.name]
        for hook in self._destroy_hooks:
            hook(obj)

    # -- world-space queries ----------------------------------------------

    def _chain(self, object_id: int):
        """Ancestors from root down to the object itself."""
        chain = []
        node = self.get(object_id)
        while node is not None:
            chain.append(node)
            node = self._objects[node.parent] if node.parent is not None else None
        chain.reverse()
        return chain

    def world_affine(self, object_id: int):
        m, t = K.MAT3_IDENTITY, (0.0, 0.0, 0.0)
        for node in self._chain(object_id):
            nm, nt = node.transform.affine()
            m, t = K.affine_compose(m, t, nm, nt)
        return m, t

    def world_position(self, object_id: int) -> Vec3:
        return self.world_affine(object_id)[1]

    def world_rotation(self, object_id: int):
        r = K.MAT3_IDENTITY
        for node in self._chain(object_id):
            r = K.mat3_mul(r, node.transform.rotation())
        return r

    def world_euler(self, object_id: int) -> Vec3:
        return K.mat3_to_euler(self.world_rotation(object_id))

    def world_scale(self, object_id: int) -> Vec3:
        sx = sy = sz = 1.0
        for node in self._chain(object_id):
            s = node.transform.scale
            sx *= s[0]
            sy *= s[1]
            sz *= s[2]
        return (sx, sy, sz)

    def world_forward(self, object_id: int) -> Vec3:
        r = self.world_rotation(object_id)
        return (r[2], r[5], r[8])  # R @ (0,0,1)

    def local_to_world(self, object_id: int, point) -> Vec3:
        m, t = self.world_affine(object_id)
        return K.affine_apply(m, t, _vec3(point, "point"))

    def world_to_local(self, object_id: int, point) -> Vec3:
        m, t = self.world_affine(object_id)
        im, it = K.affine_invert(m, t)
        return K.affine_apply(im, it, _vec3(point, "point"))

    def world_aabb(self, object_id: int, include_descendants: bool = True):
        """Axis-aligned box (min, max) around the object's scaled geometry,
        ignoring rotation; unioned over descendants when requested.
        Returns None when no geometry contributes."""
        lo = hi = None
        stack = [object_id]
        while stack:
            oid = stack.pop()
            obj = self.get(oid)
            if include_descendants:
                stack.extend(self._children.get(oid, ()))
            if obj.geometry is None or obj.geometry.kind == "prefab":
                continue
            center = self.world_position(oid)
            he = obj.geometry.half_extents(self.world_scale(oid))
            bmin = (center[0] - he[0], center[1] - he[1], center[2] - he[2])
            bmax = (center[0] + he[0], center[1] + he[1], center[2] + he[2])
            if lo is None:
                lo, hi = bmin, bmax
            else:
                lo = tuple(min(a, b) for a, b in zip(lo, bmin))
                hi = tuple(max(a, b) for a, b in zip(hi, bmax))
        return None if lo is None else (lo, hi)

    # -- references --------------------------------------------------------

    def resolve_reference(self, query: Union[str, dict]) -> int:
        """Resolve a name / tag / nearest-to descriptor to an object id.

        Tag queries expect exactly one match. Nearest queries rank by
        Euclidean distance from world positions, ties going to the earliest
        created object.
        """
        if isinstance(query, str):
            object_id = self._by_name.get(query)
            if object_id is None:
                raise NotFound(f"no object named {query!r}")
            return object_id
        if not isinstance(query, dict):
            raise NotFound(f"unsupported reference: {query!r}")

        if "name" in query:
            return self.resolve_reference(query["name"])

        if "nearest_to" in query:
            origin = _vec3(query["nearest_to"], "nearest_to")
            kind = query.get("kind")
            tag = query.get("tag")
            best = None
            for obj in self.objects():
                if kind is not None:
                    if obj.geometry is None or obj.geometry.kind != kind:
                        continue
                if tag is not None and tag not in obj.tags:
                    continue
                d = K.v_dist(self.world_position(obj.id), origin)
                key = (d, obj.created_seq)
                if best is None or key < best[0]:
                    best = (key, obj.id)
            if best is None:
                raise NotFound(f"no match for nearest query {query!r}")
            return best[1]

        if "tag" in query:
            tag = query["tag"]
            matches = [o.id for o in self.objects() if tag in o.tags]
            if not matches:
                raise NotFound(f"no object tagged {tag!r}")
            if len(matches) > 1:
                raise AmbiguousName(
                    f"{len(matches)} objects tagged {tag!r}, expected one")
            return matches[0]

        raise NotFound(f"unsupported reference: {query!r}")

    # -- snapshots ----------------------------------------------------------

    def snapshot(self, tick: int, active_animations=()) -> dict:
        """Immutable world-space view of the scene at ``tick``.

        Serializing this dict with canonical_json yields byte-identical
        output for identical histories.
        """
        objects = []
        for obj in self.objects():
            objects.append({
                "id": obj.id,
                "name": obj.name,
                "parent": obj.parent,
                "position": list(self.world_position(obj.id)),
                "orientation": list(self.world_euler(obj.id)),
                "scale": list(self.world_scale(obj.id)),
                "color": list(obj.color),
                "geometry": obj.geometry.to_dict() if obj.geometry else None,
                "physics": obj.physics,
                "grabbable": obj.grabbable,
                "visible": obj.visible,
                "placeholder": obj.is_placeholder,
                "tags": sorted(obj.tags),
            })
        return {
            "tick": tick,
            "objects": objects,
            "animations": [
                {"id": a["id"], "unit": a["unit"], "progress": a["progress"]}
                for a in active_animations
            ],
        }
