"""Animation scheduling: 11 composable units on a grouped action queue.

Specs sharing a sequence group run one after another (a successor starts
on the exact tick its predecessor completes); distinct groups run in
parallel. Advancement is a fixed-timestep tick with no wall-clock input,
so identical (scene, specs, timestep) always produce identical event logs
and final scenes.

Subjects and targets are resolved at activation time, not parse time, so
motion that happened while a spec sat in its queue is respected.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from . import kernels as K
from .context import AnimationRegistry
from .creation import parse_color
from .errors import (
    DuplicateActiveId,
    MissingTarget,
    NotFound,
    UnknownUnit,
)
from .scene import Scene, Vec3

log = logging.getLogger(__name__)

UNITS = (
    "Translate", "Rotate", "Gaze", "Orbit", "Scaling", "Coloring",
    "Attach", "Detach", "Catch", "Stop", "Destroy",
)
INSTANT_UNITS = frozenset({"Attach", "Detach", "Stop", "Destroy"})

DEFAULT_TIMESTEP = 0.02          # 50 Hz
DEFAULT_TRANSLATE_SPEED = 1.0    # m/s
DEFAULT_ANGULAR_SPEED = 45.0     # deg/s, Rotate and Orbit
DEFAULT_LERP_DURATION = 1.0      # s, Scaling and Coloring
CATCH_STANDOFF_M = 0.3

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


@dataclass(frozen=True)
class AnimationSpec:
    id: str
    unit: str
    subject: object = None          # object reference (name or descriptor)
    target: object = None           # unit-dependent: vec3 / ref / color / scale
    speed: Optional[float] = None
    duration: Optional[float] = None
    frame: str = "world"
    sequence_group: Optional[str] = None
    axis: object = None             # "x"|"y"|"z" or vec3 (Rotate/Orbit)
    degrees: Optional[float] = None
    agent: object = None            # Catch fields
    item: object = None
    destination: object = None

    def summary(self) -> dict:
        d = {"unit": self.unit}
        if isinstance(self.subject, str):
            d["subject"] = self.subject
        elif self.subject is not None:
            d["subject"] = str(self.subject)
        if self.sequence_group:
            d["group"] = self.sequence_group
        return d


def _axis_vec(axis) -> Vec3:
    if axis is None:
        return _AXES["y"]
    if isinstance(axis, str):
        try:
            return _AXES[axis.lower()]
        except KeyError:
            raise MissingTarget(f"axis must be x|y|z or a vector: {axis!r}")
    vec = tuple(float(x) for x in axis)
    if len(vec) != 3 or K.v_len(vec) == 0.0:
        raise MissingTarget(f"axis must be a non-zero 3-vector: {axis!r}")
    return vec


def _is_vec3(value) -> bool:
    return (isinstance(value, (list, tuple)) and len(value) == 3
            and all(isinstance(x, (int, float)) for x in value))


def _is_ref(value) -> bool:
    return isinstance(value, str) or (
        isinstance(value, dict)
        and any(k in value for k in ("name", "tag", "nearest_to")))


def parse_animation_request(command) -> list:
    """Validated animation JSON -> ordered AnimationSpecs, Catch expanded."""
    if isinstance(command, dict) and "animations" in command:
        entries = command["animations"]
    elif isinstance(command, dict):
        entries = [command]
    else:
        entries = list(command)
    specs = []
    for entry in entries:
        spec = _parse_entry(entry)
        if spec.unit == "Catch":
            specs.extend(expand_catch(spec))
        else:
            specs.append(spec)
    return specs


def _parse_entry(entry: dict) -> AnimationSpec:
    unit = entry.get("unit")
    if unit not in UNITS:
        raise UnknownUnit(f"unknown animation unit {unit!r}")
    spec_id = entry.get("id")
    if not spec_id or not isinstance(spec_id, str):
        raise MissingTarget(f"{unit} spec needs a string id")
    frame = entry.get("frame", "world")
    if frame not in ("world", "local"):
        raise MissingTarget(f"frame must be world|local: {frame!r}")
    spec = AnimationSpec(
        id=spec_id,
        unit=unit,
        subject=entry.get("subject"),
        target=entry.get("target"),
        speed=(float(entry["speed"]) if entry.get("speed") is not None
               else None),
        duration=(float(entry["duration"])
                  if entry.get("duration") is not None else None),
        frame=frame,
        sequence_group=entry.get("sequence_group"),
        axis=entry.get("axis"),
        degrees=(float(entry["degrees"])
                 if entry.get("degrees") is not None else None),
        agent=entry.get("agent"),
        item=entry.get("item"),
        destination=entry.get("destination"),
    )
    _validate_spec(spec)
    return spec


def _validate_spec(spec: AnimationSpec) -> None:
    unit = spec.unit
    if unit == "Stop":
        if not (isinstance(spec.target, str) or isinstance(spec.subject, str)):
            raise MissingTarget("Stop needs the animation id to cease")
        return
    if unit == "Catch":
        for fname in ("agent", "item", "destination"):
            if getattr(spec, fname) is None:
                raise MissingTarget(f"Catch needs {fname}")
        return
    if spec.subject is None:
        raise MissingTarget(f"{unit} needs a subject")
    if unit == "Translate":
        if not (_is_vec3(spec.target) or _is_ref(spec.target)
                or isinstance(spec.target, dict)):
            raise MissingTarget("Translate needs a target position or object")
    elif unit == "Rotate":
        if spec.target is None and spec.axis is None:
            raise MissingTarget(
                "Rotate needs a target orientation or an axis")
    elif unit in ("Gaze", "Orbit", "Attach"):
        if not _is_ref(spec.target):
            raise MissingTarget(f"{unit} target must be an object reference")
    elif unit == "Scaling":
        value = spec.target
        if isinstance(value, (int, float)):
            ok = value > 0
        elif _is_vec3(value):
            ok = all(x > 0 for x in value)
        else:
            ok = False
        if not ok:
            raise MissingTarget("Scaling target must be a positive scale")
    elif unit == "Coloring":
        try:
            parse_color(spec.target)
        except (TypeError, ValueError):
            raise MissingTarget(f"Coloring target must be a color: "
                                f"{spec.target!r}")


def expand_catch(spec: AnimationSpec) -> list:
    """Catch -> approach, aim, grab, carry, drop in one sequence group."""
    group = spec.sequence_group or f"catch:{spec.id}"
    speed = spec.speed
    return [
        AnimationSpec(id=f"{spec.id}:approach", unit="Translate",
                      subject=spec.agent,
                      target={"near": spec.item, "standoff": CATCH_STANDOFF_M},
                      speed=speed, sequence_group=group),
        AnimationSpec(id=f"{spec.id}:aim", unit="Rotate", subject=spec.agent,
                      target={"face": spec.item}, sequence_group=group),
        AnimationSpec(id=f"{spec.id}:grab", unit="Attach", subject=spec.item,
                      target=spec.agent, sequence_group=group),
        AnimationSpec(id=f"{spec.id}:carry", unit="Translate",
                      subject=spec.agent, target=spec.destination,
                      speed=speed, sequence_group=group),
        AnimationSpec(id=f"{spec.id}:drop", unit="Detach", subject=spec.item,
                      sequence_group=group),
    ]


@dataclass
class _Instance:
    spec: AnimationSpec
    subject_id: int
    subject_name: str
    ticks: int = 0
    progress: float = 0.0
    state: dict = field(default_factory=dict)


class Animator:
    """Action queue plus the fixed-timestep stepper."""

    def __init__(self, scene: Scene, registry: Optional[AnimationRegistry] = None,
                 timestep: float = DEFAULT_TIMESTEP):
        self.scene = scene
        self.registry = registry if registry is not None else AnimationRegistry()
        self.timestep = timestep
        self._queues: dict[str, list] = {}
        self._active: dict[str, _Instance] = {}
        self._group_order: list = []
        self._anon = 0
        self._prev_parents: dict[int, list] = {}
        self._side_events: list = []  # stop/destroy fallout during a step
        self._clock = 0
        scene.on_destroy(self._drop_subject)

    # -- scheduling -----------------------------------------------------------

    def schedule(self, specs: list, tick: int = 0):
        """Enqueue specs per sequence group and activate idle group heads.

        All-or-nothing on validation: duplicate-id conflicts are detected
        before anything is enqueued. Returns (animation ids in spec order,
        activation events)."""
        self._clock = tick
        prepared = []
        for spec in specs:
            group = spec.sequence_group
            if group is None:
                self._anon += 1
                group = f"~{self._anon}"
                spec = replace(spec, sequence_group=group)
            active = self._active.get(group)
            if active is not None and active.spec.id == spec.id:
                raise DuplicateActiveId(
                    f"id {spec.id!r} already active in group {group!r}")
            prepared.append(spec)

        events = []
        ids = []
        for spec in prepared:
            group = spec.sequence_group
            if group not in self._queues:
                self._queues[group] = []
                self._group_order.append(group)
            self._queues[group].append(spec)
            self.registry.register(spec.id, {**spec.summary(),
                                             "state": "pending"})
            ids.append(spec.id)
        for group in list(self._group_order):
            if group not in self._active:
                self._activate_next(group, tick, events)
        return ids, events

    def _activate_next(self, group: str, tick: int, events: list) -> None:
        queue = self._queues.get(group)
        while queue:
            spec = queue.pop(0)
            instance = self._activate(spec, tick, events)
            if instance is not None:
                self._active[group] = instance
                return
        # queue drained; forget empty anonymous groups
        if group in self._queues and not self._queues[group]:
            del self._queues[group]
            self._group_order.remove(group)
            self._active.pop(group, None)

    def _activate(self, spec: AnimationSpec, tick: int, events: list):
        try:
            instance = self._bind(spec)
        except Exception as exc:
            log.warning("skipping animation %r: %s", spec.id, exc)
            self.registry.mark(spec.id, "skipped")
            events.append(self._event(tick, spec, "skipped"))
            return None
        self.registry.mark(spec.id, "active")
        events.append(self._event(tick, spec, "started",
                                  subject=instance.subject_name))
        return instance

    def _bind(self, spec: AnimationSpec) -> _Instance:
        """Late-bound setup: resolve references and freeze kinematics."""
        unit = spec.unit
        if unit == "Stop":
            return _Instance(spec=spec, subject_id=0, subject_name="")
        subject_id = self.scene.resolve_reference(spec.subject)
        subject_name = self.scene.get(subject_id).name
        inst = _Instance(spec=spec, subject_id=subject_id,
                         subject_name=subject_name)
        setup = getattr(self, f"_setup_{unit.lower()}", None)
        if setup is not None:
            setup(inst)
        return inst

    # -- per-unit setup ---------------------------------------------------------

    def _world_target_point(self, inst, value) -> Vec3:
        spec = inst.spec
        if isinstance(value, dict) and "near" in value:
            # Catch approach: stop short of the item by the standoff
            item_pos = self.scene.world_position(
                self.scene.resolve_reference(value["near"]))
            own = self.scene.world_position(inst.subject_id)
            away = K.v_sub(own, item_pos)
            if K.v_len(away) < 1e-9:
                away = (1.0, 0.0, 0.0)
            return K.v_add(item_pos, K.v_scale(K.v_normalize(away),
                                               float(value["standoff"])))
        if _is_ref(value):
            return self.scene.world_position(
                self.scene.resolve_reference(value))
        point = tuple(float(x) for x in value)
        if spec.frame == "local":
            return self.scene.local_to_world(inst.subject_id, point)
        return point

    def _setup_translate(self, inst) -> None:
        target = self._world_target_point(inst, inst.spec.target)
        start = self.scene.world_position(inst.subject_id)
        distance = K.v_dist(start, target)
        duration = inst.spec.duration
        if duration is None and inst.spec.speed is not None:
            speed = abs(inst.spec.speed)
            duration = distance / speed if speed > 0 else 0.0
        elif duration is None:
            duration = distance / DEFAULT_TRANSLATE_SPEED
        inst.state = {"start": start, "target": target,
                      "distance": distance, "duration": duration}

    def _setup_rotate(self, inst) -> None:
        spec = inst.spec
        r0 = self.scene.world_rotation(inst.subject_id)
        if spec.target is not None:
            if isinstance(spec.target, dict) and "face" in spec.target:
                target_id = self.scene.resolve_reference(spec.target["face"])
                direction = K.v_sub(self.scene.world_position(target_id),
                                    self.scene.world_position(inst.subject_id))
                rt = K.euler_to_mat3(*K.aim_euler(direction))
            else:
                euler = tuple(float(x) for x in spec.target)
                rt = K.euler_to_mat3(*euler)
                if spec.frame == "local":
                    parent = self.scene.get(inst.subject_id).parent
                    if parent is not None:
                        rt = K.mat3_mul(self.scene.world_rotation(parent), rt)
            rel = K.mat3_mul(K.mat3_transpose(r0), rt)
            axis, total = K.mat3_to_axis_angle(rel)
            # rel is expressed in the subject frame: spin about R0 @ axis
            axis = K.mat3_apply(r0, axis)
        else:
            axis = _axis_vec(spec.axis)
            if spec.frame == "local":
                axis = K.mat3_apply(r0, axis)
            total = spec.degrees  # None = endless spin
        direction = 1.0 if (spec.speed is None or spec.speed >= 0) else -1.0
        if total is not None and total < 0:
            direction = -direction
            total = -total
        duration = spec.duration
        speed = abs(spec.speed) if spec.speed else DEFAULT_ANGULAR_SPEED
        if duration is not None and total is not None:
            speed = total / duration if duration > 0 else total
        elif duration is not None and total is None:
            total = speed * duration
        inst.state = {"axis": axis, "total": total, "speed": speed,
                      "turned": 0.0, "direction": direction}

    def _setup_gaze(self, inst) -> None:
        inst.state = {"target": inst.spec.target,
                      "duration": inst.spec.duration}

    def _setup_orbit(self, inst) -> None:
        spec = inst.spec
        total = spec.degrees
        speed = spec.speed if spec.speed is not None else DEFAULT_ANGULAR_SPEED
        if total is not None and total < 0:
            speed = -abs(speed)
            total = -total
        if spec.duration is not None:
            if total is not None and spec.duration > 0:
                speed = (total / spec.duration) * (1.0 if speed >= 0 else -1.0)
            else:
                total = abs(speed) * spec.duration
        inst.state = {"center_ref": spec.target, "axis": _axis_vec(spec.axis),
                      "speed": speed, "total": total, "turned": 0.0}

    def _setup_scaling(self, inst) -> None:
        spec = inst.spec
        start = self.scene.get(inst.subject_id).transform.scale
        if isinstance(spec.target, (int, float)):
            target = (float(spec.target),) * 3
        else:
            target = tuple(float(x) for x in spec.target)
        duration = spec.duration
        if duration is None and spec.speed:
            delta = max(abs(t - s) for t, s in zip(target, start))
            duration = delta / abs(spec.speed)
        elif duration is None:
            duration = DEFAULT_LERP_DURATION
        inst.state = {"start": start, "target": target, "duration": duration}

    def _setup_coloring(self, inst) -> None:
        spec = inst.spec
        start = self.scene.get(inst.subject_id).color
        target = parse_color(spec.target)
        duration = spec.duration if spec.duration is not None \
            else DEFAULT_LERP_DURATION
        inst.state = {"start": start, "target": target, "duration": duration}

    def _setup_attach(self, inst) -> None:
        inst.state = {"parent_ref": inst.spec.target}

    # -- the stepper -------------------------------------------------------------

    def tick(self, dt: float, tick: int) -> list:
        """Advance every active instance by one fixed step.

        ``dt`` must equal the configured timestep: variable steps would
        break the determinism guarantees."""
        if abs(dt - self.timestep) > 1e-12:
            raise ValueError(
                f"tick dt {dt!r} != configured timestep {self.timestep!r}")
        self._clock = tick
        events = []
        for group in list(self._group_order):
            instance = self._active.get(group)
            if instance is None:
                continue
            try:
                done = self._advance(instance, dt)
            except Exception as exc:
                log.warning("animation %r failed: %s", instance.spec.id, exc)
                self.registry.mark(instance.spec.id, "skipped")
                events.append(self._event(tick, instance.spec, "skipped",
                                          subject=instance.subject_name))
                done = True
            else:
                kind = "completed" if done else "progressed"
                if done:
                    self.registry.mark(instance.spec.id, "completed")
                events.append(self._event(
                    tick, instance.spec, kind,
                    subject=instance.subject_name,
                    progress=instance.progress))
            if done:
                self._active.pop(group, None)
                self._activate_next(group, tick, events)
        events.extend(self.drain_side_events())
        return events

    def drain_side_events(self) -> list:
        events, self._side_events = self._side_events, []
        return events

    def _advance(self, inst: _Instance, dt: float) -> bool:
        inst.ticks += 1
        handler = getattr(self, f"_step_{inst.spec.unit.lower()}")
        return handler(inst, dt)

    def _step_translate(self, inst, dt) -> bool:
        s = inst.state
        elapsed = inst.ticks * dt
        if s["duration"] <= 0 or s["distance"] == 0.0:
            self.scene.set_world_position(inst.subject_id, s["target"])
            inst.progress = 1.0
            return True
        t = min(elapsed / s["duration"], 1.0)
        pos = tuple(a + (b - a) * t for a, b in zip(s["start"], s["target"]))
        if t >= 1.0:
            pos = s["target"]  # exact landing, never overshoot
        self.scene.set_world_position(inst.subject_id, pos)
        inst.progress = t
        return t >= 1.0

    def _step_rotate(self, inst, dt) -> bool:
        s = inst.state
        step = abs(s["speed"]) * dt
        if s["total"] is not None:
            remaining = s["total"] - s["turned"]
            step = min(step, remaining)
        angle = step * s["direction"]
        rot = K.mat3_mul(
            K.axis_angle_to_mat3(s["axis"], angle),
            self.scene.world_rotation(inst.subject_id))
        self.scene.set_world_rotation(inst.subject_id, rot)
        s["turned"] += step
        if s["total"] is not None and s["total"] > 0:
            inst.progress = min(s["turned"] / s["total"], 1.0)
            return s["turned"] >= s["total"] - 1e-12
        inst.progress = 0.0
        return False

    def _step_gaze(self, inst, dt) -> bool:
        s = inst.state
        target_id = self.scene.resolve_reference(s["target"])
        direction = K.v_sub(self.scene.world_position(target_id),
                            self.scene.world_position(inst.subject_id))
        if K.v_len(direction) > 1e-9:
            self.scene.set_world_rotation(
                inst.subject_id, K.euler_to_mat3(*K.aim_euler(direction)))
        if s["duration"] is not None:
            elapsed = inst.ticks * dt
            inst.progress = min(elapsed / s["duration"], 1.0)
            return elapsed >= s["duration"] - 1e-12
        inst.progress = 0.0
        return False

    def _step_orbit(self, inst, dt) -> bool:
        s = inst.state
        center_id = self.scene.resolve_reference(s["center_ref"])
        if center_id == inst.subject_id:
            raise ValueError("orbit center equals the orbiting object")
        center = self.scene.world_position(center_id)
        step = abs(s["speed"]) * dt
        if s["total"] is not None:
            step = min(step, s["total"] - s["turned"])
        angle = step if s["speed"] >= 0 else -step
        pos = K.rotate_about_pivot(
            self.scene.world_position(inst.subject_id), center,
            s["axis"], angle)
        self.scene.set_world_position(inst.subject_id, pos)
        s["turned"] += step
        if s["total"] is not None and s["total"] > 0:
            inst.progress = min(s["turned"] / s["total"], 1.0)
            return s["turned"] >= s["total"] - 1e-12
        inst.progress = 0.0
        return False

    def _step_scaling(self, inst, dt) -> bool:
        s = inst.state
        elapsed = inst.ticks * dt
        t = 1.0 if s["duration"] <= 0 else min(elapsed / s["duration"], 1.0)
        scale = tuple(a + (b - a) * t for a, b in zip(s["start"], s["target"]))
        if t >= 1.0:
            scale = s["target"]
        self.scene.update_transform(inst.subject_id, scale=scale)
        inst.progress = t
        return t >= 1.0

    def _step_coloring(self, inst, dt) -> bool:
        s = inst.state
        elapsed = inst.ticks * dt
        t = 1.0 if s["duration"] <= 0 else min(elapsed / s["duration"], 1.0)
        color = tuple(a + (b - a) * t for a, b in zip(s["start"], s["target"]))
        if t >= 1.0:
            color = s["target"]
        self.scene.get(inst.subject_id).color = color
        inst.progress = t
        return t >= 1.0

    def _step_attach(self, inst, dt) -> bool:
        parent_id = self.scene.resolve_reference(inst.state["parent_ref"])
        previous = self.scene.get(inst.subject_id).parent
        self._prev_parents.setdefault(inst.subject_id, []).append(previous)
        self.scene.set_parent(inst.subject_id, parent_id, preserve_world=True)
        inst.progress = 1.0
        return True

    def _step_detach(self, inst, dt) -> bool:
        stack = self._prev_parents.get(inst.subject_id)
        previous = stack.pop() if stack else None
        if previous is not None and previous not in self.scene:
            previous = None
        self.scene.set_parent(inst.subject_id, previous, preserve_world=True)
        inst.progress = 1.0
        return True

    def _step_stop(self, inst, dt) -> bool:
        target_id = inst.spec.target if isinstance(inst.spec.target, str) \
            else inst.spec.subject
        try:
            self.stop(target_id)
        except NotFound as exc:
            log.warning("Stop unit: %s", exc)
        inst.progress = 1.0
        return True

    def _step_destroy(self, inst, dt) -> bool:
        self.scene.destroy_object(inst.subject_id)
        self.registry.remove_for_subject(inst.subject_name)
        inst.progress = 1.0
        return True

    # -- control -------------------------------------------------------------

    def stop(self, animation_id: str, tick: Optional[int] = None) -> None:
        """Remove a running animation; its subject stays where it is.

        Stopping an id that already completed is a warned no-op; stopping an
        id that was never registered raises NotFound. Resulting events land
        in the side-event buffer (drained by tick() or the engine).
        """
        at = self._clock if tick is None else tick
        for group, instance in list(self._active.items()):
            if instance.spec.id == animation_id:
                self._active.pop(group)
                self.registry.mark(animation_id, "stopped")
                self._side_events.append(self._event(
                    at, instance.spec, "stopped",
                    subject=instance.subject_name))
                self._activate_next(group, at, self._side_events)
                return
        if animation_id in self.registry:
            log.warning("stop of inactive animation %r ignored", animation_id)
            return
        raise NotFound(f"animation id {animation_id!r} not registered")

    def active_animations(self) -> list:
        """Stable view for snapshots: sorted by animation id."""
        entries = []
        for instance in self._active.values():
            entries.append({
                "id": instance.spec.id,
                "unit": instance.spec.unit,
                "progress": instance.progress,
                "subject": instance.subject_name,
            })
        entries.sort(key=lambda e: e["id"])
        return entries

    def has_active(self) -> bool:
        return bool(self._active)

    def is_animated(self, object_id: int) -> bool:
        return any(i.subject_id == object_id for i in self._active.values())

    def is_held(self, object_id: int) -> bool:
        """True while an Attach unit's reparent is pending its Detach."""
        return bool(self._prev_parents.get(object_id))

    def _drop_subject(self, obj) -> None:
        for group, instance in list(self._active.items()):
            if instance.subject_id == obj.id:
                self.registry.mark(instance.spec.id, "stopped")
                self._active.pop(group)
                self._side_events.append(self._event(
                    self._clock, instance.spec, "stopped",
                    subject=instance.subject_name))
                self._activate_next(group, self._clock, self._side_events)
        self._prev_parents.pop(obj.id, None)

    @staticmethod
    def _event(tick, spec, kind, subject="", progress=None) -> dict:
        event = {"tick": tick, "id": spec.id, "unit": spec.unit,
                 "kind": kind, "subject": subject}
        if progress is not None:
            event["progress"] = progress
        return event
