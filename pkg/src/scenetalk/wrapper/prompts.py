"""Prompt templates and envelope construction.

Template text is versioned: golden transcripts are keyed by the SHA-256
digest of the full envelope, so any wording change deliberately
invalidates pinned fixtures. Bump TEMPLATES_VERSION when editing.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from ..context import ContextPayload
from ..errors import CategoryMismatch
from ..jsonutil import canonical_json
from .schemas import DECOMPOSITION_SCHEMA, TASK_SCHEMAS

TEMPLATES_VERSION = 1

INITIAL_SYSTEM = """\
You plan requests for a headless 3D scene assistant. Split the user's
request into ordered subtasks (create, animate, fuse, converse) and name
the context categories each subtask needs. Categories: resources,
virtual_objects, real_world, animations, user_context, history; each may
list properties from: position, orientation, scale, size, color, tags,
parent, id. Reply with one JSON object matching this schema:
{schema}"""

INITIAL_USER = """\
Recent messages:
{history}

Request: {request}"""

REFINED_SYSTEM = {
    "create": """\
You create objects in a 3D scene. Prefer prefabs named in the resources
context; otherwise build from primitives (cube, sphere, cylinder,
capsule, plane). Use the "parent" and "frame":"local" fields for composite
objects so child positions are relative. Reply with one JSON object
matching this schema, optionally preceded by one short confirmation
sentence:
{schema}""",
    "animate": """\
You animate objects in a 3D scene with these units: Translate, Rotate,
Gaze, Orbit, Scaling, Coloring, Attach, Detach, Catch, Stop, Destroy.
Give every animation a fresh string id. Specs sharing a sequence_group
run in order; distinct groups run in parallel. Reply with one JSON object
matching this schema, optionally preceded by one short confirmation
sentence:
{schema}""",
    "fuse": """\
You wire interaction building blocks (grabbable, hand_follow) onto scene
objects. Reply with one JSON object matching this schema, optionally
preceded by one short confirmation sentence:
{schema}""",
    "converse": """\
You are a friendly scene assistant. Answer the user in one or two short
sentences. Reply with one JSON object matching this schema:
{schema}""",
}

REFINED_USER = """\
Context:
{context}

Recent messages:
{history}

Subtask: {subtask}"""


@dataclass(frozen=True)
class PromptEnvelope:
    stage: str  # "initial" | "refined"
    system_text: str
    user_text: str
    schema: dict
    context_sections: Optional[ContextPayload] = None
    history: tuple = ()
    task_type: Optional[str] = None

    def digest(self) -> str:
        body = {
            "version": TEMPLATES_VERSION,
            "stage": self.stage,
            "system": self.system_text,
            "user": self.user_text,
            "schema": self.schema,
            "task_type": self.task_type,
        }
        return hashlib.sha256(
            canonical_json(body).encode("utf-8")).hexdigest()


def _history_block(history) -> str:
    if not history:
        return "(none)"
    return "\n".join(f"{i + 1}. {m}" for i, m in enumerate(history))


def build_initial_prompt(text: str, history) -> PromptEnvelope:
    history = tuple(history)
    return PromptEnvelope(
        stage="initial",
        system_text=INITIAL_SYSTEM.format(
            schema=canonical_json(DECOMPOSITION_SCHEMA)),
        user_text=INITIAL_USER.format(
            history=_history_block(history), request=text),
        schema=DECOMPOSITION_SCHEMA,
        history=history,
    )


def build_refined_prompt(subtask, payload: ContextPayload,
                         history) -> PromptEnvelope:
    """Embed the subtask's schema and context sections verbatim.

    The payload must carry exactly the categories the subtask asked for.
    """
    wanted = {c.kind for c in subtask.categories}
    got = set(payload.sections)
    if wanted != got:
        raise CategoryMismatch(
            f"payload sections {sorted(got)} != requested {sorted(wanted)}")
    history = tuple(history)
    schema = TASK_SCHEMAS[subtask.task_type]
    return PromptEnvelope(
        stage="refined",
        system_text=REFINED_SYSTEM[subtask.task_type].format(
            schema=canonical_json(schema)),
        user_text=REFINED_USER.format(
            context=payload.as_text() if payload.sections else "(none)",
            history=_history_block(history),
            subtask=subtask.paraphrased_request),
        schema=schema,
        context_sections=payload,
        history=history,
        task_type=subtask.task_type,
    )
