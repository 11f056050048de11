"""Context library: categorized scene/user/resource state for prompts.

The initial LLM stage names categories (and per-entry properties); this
module renders exactly those slices as stable text sections for the
refined prompt, keeps the rolling user-message history, and indexes
animation ids.

Section text format is one line per entity, ``name | prop=value | ...``
with canonical float formatting. The format is load-bearing: golden
transcripts embed these sections verbatim.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import NotFound, UnknownCategory, UnknownProperty
from .jsonutil import format_float
from .scene import Geometry

log = logging.getLogger(__name__)

DEFAULT_HISTORY_CAPACITY = 10

CATEGORY_KINDS = (
    "resources",
    "virtual_objects",
    "real_world",
    "animations",
    "user_context",
    "history",
)

# requested properties must be a subset of these, per category
ALLOWED_PROPERTIES = {
    "resources": frozenset({"tags"}),
    "virtual_objects": frozenset(
        {"position", "orientation", "scale", "size", "color", "tags",
         "parent", "id", "physics", "grabbable", "visible", "kind"}),
    "real_world": frozenset(
        {"position", "orientation", "size", "tags", "id", "kind"}),
    "animations": frozenset({"id"}),
    "user_context": frozenset({"position", "orientation"}),
    "history": frozenset(),
}

PROXY_TAG = "room_proxy"  # marks proxy-backed scene objects


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate: ceil(utf-8 bytes / 4)."""
    return (len(text.encode("utf-8")) + 3) // 4


def _fvec(v) -> str:
    return "(" + ",".join(format_float(float(x)) for x in v) + ")"


@dataclass(frozen=True)
class ContextCategory:
    kind: str
    properties: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in CATEGORY_KINDS:
            raise UnknownCategory(f"unknown context category {self.kind!r}")
        object.__setattr__(self, "properties", frozenset(self.properties))
        extra = self.properties - ALLOWED_PROPERTIES[self.kind]
        if extra:
            raise UnknownProperty(
                f"properties {sorted(extra)} not allowed for {self.kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ContextCategory":
        return cls(kind=d["kind"], properties=frozenset(d.get("properties", ())))


@dataclass(frozen=True)
class ContextPayload:
    sections: dict
    estimated_tokens: int

    def as_text(self) -> str:
        blocks = []
        for kind in sorted(self.sections):
            blocks.append(f"[{kind}]\n{self.sections[kind]}")
        return "\n\n".join(blocks)


class HistoryQueue:
    """Fixed-capacity queue of the latest user messages, oldest evicted."""

    def __init__(self, capacity: int = DEFAULT_HISTORY_CAPACITY):
        if capacity <= 0:
            raise ValueError("history capacity must be positive")
        self.capacity = capacity
        self._messages = deque(maxlen=capacity)

    def record(self, text: str) -> None:
        self._messages.append(text)

    def messages(self) -> list:
        return list(self._messages)

    def __len__(self) -> int:
        return len(self._messages)


class AnimationRegistry:
    """Index of animation ids to descriptor summaries.

    Execution state lives in the animation scheduler; this registry is the
    lookup surface exposed to prompts. Completed/stopped entries stay
    indexed (marked) until the subject object is destroyed.
    """

    def __init__(self):
        self._entries: dict[str, dict] = {}

    def register(self, animation_id: str, descriptor: dict) -> None:
        if not animation_id:
            raise ValueError("animation id must be non-empty")
        if animation_id in self._entries:
            log.warning("animation id %r re-registered; overwriting", animation_id)
        entry = dict(descriptor)
        entry.setdefault("state", "active")
        self._entries[animation_id] = entry

    def lookup(self, animation_id: str) -> dict:
        try:
            return dict(self._entries[animation_id])
        except KeyError:
            raise NotFound(f"animation id {animation_id!r} not registered")

    def mark(self, animation_id: str, state: str) -> None:
        if animation_id in self._entries:
            self._entries[animation_id]["state"] = state

    def remove_for_subject(self, subject_name: str) -> None:
        stale = [aid for aid, e in self._entries.items()
                 if e.get("subject") == subject_name]
        for aid in stale:
            del self._entries[aid]

    def entries(self) -> dict:
        return {aid: dict(e) for aid, e in self._entries.items()}

    def __contains__(self, animation_id: str) -> bool:
        return animation_id in self._entries


class ContextLibrary:
    """Bundles history, the animation index, and category retrieval."""

    def __init__(self, history_capacity: int = DEFAULT_HISTORY_CAPACITY):
        self.history = HistoryQueue(history_capacity)
        self.animations = AnimationRegistry()

    def record_message(self, text: str) -> None:
        self.history.record(text)

    def retrieve(
        self,
        request: Iterable[ContextCategory],
        snapshot: dict,
        prefabs=None,
        room_proxies: Iterable = (),
        user=None,
    ) -> ContextPayload:
        """Render exactly the requested category sections from a snapshot."""
        request = list(request)
        if not request:
            raise ValueError("context request must name at least one category")
        sections = {}
        for cat in request:
            sections[cat.kind] = self._render(cat, snapshot, prefabs,
                                              room_proxies, user)
        total = sum(estimate_tokens(text) for text in sections.values())
        return ContextPayload(sections=sections, estimated_tokens=total)

    def full_request(self) -> list:
        """Every category with every allowed property (the unreduced dump)."""
        return [ContextCategory(kind, ALLOWED_PROPERTIES[kind])
                for kind in CATEGORY_KINDS]

    def _render(self, cat, snapshot, prefabs, room_proxies, user) -> str:
        if cat.kind == "resources":
            return self._render_resources(cat, prefabs)
        if cat.kind == "virtual_objects":
            return self._render_objects(cat, snapshot)
        if cat.kind == "real_world":
            return self._render_proxies(cat, room_proxies)
        if cat.kind == "animations":
            return self._render_animations()
        if cat.kind == "user_context":
            return self._render_user(cat, user)
        if cat.kind == "history":
            return self._render_history()
        raise UnknownCategory(cat.kind)

    def _render_resources(self, cat, prefabs) -> str:
        if prefabs is None:
            return "(no prefab resources)"
        lines = []
        for name in prefabs.names():
            parts = [name]
            if "tags" in cat.properties:
                tags = prefabs.get(name).tags
                if tags:
                    parts.append("tags=" + ",".join(sorted(tags)))
            lines.append(" | ".join(parts))
        return "\n".join(lines) if lines else "(no prefab resources)"

    def _render_objects(self, cat, snapshot) -> str:
        lines = []
        for obj in snapshot["objects"]:
            if PROXY_TAG in obj["tags"]:
                continue
            parts = [obj["name"]]
            props = cat.properties
            if "id" in props:
                parts.append(f"id={obj['id']}")
            if "position" in props:
                parts.append("position=" + _fvec(obj["position"]))
            if "orientation" in props:
                parts.append("orientation=" + _fvec(obj["orientation"]))
            if "scale" in props:
                parts.append("scale=" + _fvec(obj["scale"]))
            if "size" in props and obj["geometry"]:
                geom = Geometry(**obj["geometry"])
                he = geom.half_extents(tuple(obj["scale"]))
                parts.append("size=" + _fvec((2 * he[0], 2 * he[1], 2 * he[2])))
            if "color" in props:
                parts.append("color=" + _fvec(obj["color"]))
            if "tags" in props and obj["tags"]:
                parts.append("tags=" + ",".join(obj["tags"]))
            if "parent" in props and obj["parent"] is not None:
                parent = next((o["name"] for o in snapshot["objects"]
                               if o["id"] == obj["parent"]), None)
                if parent:
                    parts.append(f"parent={parent}")
            if "physics" in props:
                parts.append(f"physics={str(obj['physics']).lower()}")
            if "grabbable" in props:
                parts.append(f"grabbable={str(obj['grabbable']).lower()}")
            if "visible" in props:
                parts.append(f"visible={str(obj['visible']).lower()}")
            if "kind" in props and obj["geometry"]:
                kind = obj["geometry"].get("prefab") or obj["geometry"]["kind"]
                parts.append(f"kind={kind}")
            lines.append(" | ".join(parts))
        return "\n".join(lines) if lines else "(no virtual objects)"

    def _render_proxies(self, cat, room_proxies) -> str:
        lines = []
        for proxy in room_proxies:
            parts = [proxy.generic_name]
            props = cat.properties
            if "id" in props:
                parts.append(f"id={proxy.id}")
            if "tags" in props and proxy.tags:
                parts.append("tags=" + ",".join(sorted(proxy.tags)))
            if "position" in props:
                parts.append("center=" + _fvec(proxy.center))
            if "size" in props:
                e = proxy.extents
                parts.append("size=" + _fvec((2 * e[0], 2 * e[1], 2 * e[2])))
                parts.append("top=" + format_float(proxy.top))
            if "orientation" in props:
                parts.append("yaw=" + format_float(proxy.yaw_deg))
            if "kind" in props:
                parts.append(f"kind={proxy.kind}")
            lines.append(" | ".join(parts))
        return "\n".join(lines) if lines else "(no real-world objects scanned)"

    def _render_animations(self) -> str:
        lines = []
        for aid in sorted(self.animations.entries()):
            entry = self.animations.lookup(aid)
            parts = [aid]
            if "unit" in entry:
                parts.append(f"unit={entry['unit']}")
            if entry.get("subject"):
                parts.append(f"subject={entry['subject']}")
            parts.append(f"state={entry.get('state', 'active')}")
            lines.append(" | ".join(parts))
        return "\n".join(lines) if lines else "(no animations)"

    def _render_user(self, cat, user) -> str:
        if user is None:
            return "(no user tracking)"
        props = cat.properties
        parts = ["head"]
        if "position" in props:
            parts.append("position=" + _fvec(user.head_position))
        if "orientation" in props:
            parts.append("orientation=" + _fvec(user.head_euler))
        lines = [" | ".join(parts)]
        for hand in ("left", "right"):
            pose = user.hand(hand)
            if pose is None:
                continue
            parts = [f"{hand}_hand"]
            if "position" in props:
                parts.append("palm=" + _fvec(pose.palm_position))
            if "orientation" in props:
                parts.append("orientation=" + _fvec(pose.palm_orientation))
            lines.append(" | ".join(parts))
            if "position" in props:
                bone_bits = [f"{bone}={_fvec(pos)}"
                             for bone, pos in sorted(pose.bones.items())]
                lines.append(f"{hand}_hand_bones | " + " | ".join(bone_bits))
        return "\n".join(lines)

    def _render_history(self) -> str:
        msgs = self.history.messages()
        if not msgs:
            return "(no prior messages)"
        return "\n".join(f"{i + 1}. {m}" for i, m in enumerate(msgs))
