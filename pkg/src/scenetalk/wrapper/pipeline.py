"""Request orchestration: initial stage, refined stages, dispatch.

One user request costs exactly 1 initial call plus K refined calls (one
per subtask). Every structured response is validated before anything
touches the scene; a response that fails validation yields a warning and
zero state change, never a partial command.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from ..animation import parse_animation_request
from ..context import ContextCategory, ContextPayload
from ..errors import (
    EngineError,
    NoJSONFound,
    ProviderUnavailable,
    SchemaViolation,
    UnknownCategory,
    UnknownProperty,
)
from ..jsonutil import split_json_and_prose
from .prompts import PromptEnvelope, build_initial_prompt, build_refined_prompt
from .schemas import validate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Subtask:
    task_type: str
    paraphrased_request: str
    categories: tuple


@dataclass(frozen=True)
class TaskDecomposition:
    subtasks: tuple


@dataclass(frozen=True)
class CommandEnvelope:
    task_type: str
    payload: Optional[dict]
    speech_text: Optional[str] = None


@dataclass(frozen=True)
class TokenUsage:
    request_id: str
    stage: str
    input_tokens: int
    output_tokens: int


class UsageLedger:
    """Per-call token records with per-request totals and rolling averages."""

    def __init__(self):
        self._entries: list[TokenUsage] = []
        self._latency: dict[str, float] = {}

    def add(self, request_id: str, stage: str, input_tokens: int,
            output_tokens: int) -> None:
        if input_tokens < 0 or output_tokens < 0:
            raise ValueError("token counts must be non-negative")
        self._entries.append(TokenUsage(request_id, stage,
                                        input_tokens, output_tokens))

    def totals(self, request_id: str) -> dict:
        calls = [e for e in self._entries if e.request_id == request_id]
        return {
            "request_id": request_id,
            "calls": len(calls),
            "input_tokens": sum(e.input_tokens for e in calls),
            "output_tokens": sum(e.output_tokens for e in calls),
        }

    def request_ids(self) -> list:
        seen = []
        for entry in self._entries:
            if entry.request_id not in seen:
                seen.append(entry.request_id)
        return seen

    def rolling_average(self, last_n: Optional[int] = None) -> dict:
        ids = self.request_ids()
        if last_n is not None:
            ids = ids[-last_n:]
        if not ids:
            return {"requests": 0, "input_tokens": 0.0, "output_tokens": 0.0}
        per = [self.totals(rid) for rid in ids]
        return {
            "requests": len(ids),
            "input_tokens": sum(p["input_tokens"] for p in per) / len(ids),
            "output_tokens": sum(p["output_tokens"] for p in per) / len(ids),
        }

    def record_latency(self, request_id: str, seconds: float) -> None:
        self._latency[request_id] = seconds

    def latency(self, request_id: str) -> Optional[float]:
        return self._latency.get(request_id)

    def dump(self) -> list:
        return [
            {"request_id": e.request_id, "stage": e.stage,
             "input_tokens": e.input_tokens, "output_tokens": e.output_tokens}
            for e in self._entries
        ]


@dataclass
class RequestResult:
    request_id: str
    executed: list = field(default_factory=list)   # CommandEnvelopes applied
    speech: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)   # per-envelope dispatch info
    warnings: list = field(default_factory=list)
    usage: dict = field(default_factory=dict)
    elapsed_s: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.warnings


def parse_initial_response(text: str) -> TaskDecomposition:
    """First balanced JSON in the response -> validated decomposition."""
    payload, _ = split_json_and_prose(text)
    if payload is None:
        raise NoJSONFound("initial response contained no JSON")
    validate(payload, "decomposition")
    subtasks = []
    for i, entry in enumerate(payload["subtasks"]):
        try:
            categories = tuple(ContextCategory.from_dict(c)
                               for c in entry.get("categories", ()))
        except (UnknownCategory, UnknownProperty) as exc:
            raise SchemaViolation(str(exc), f"$.subtasks[{i}].categories")
        subtasks.append(Subtask(
            task_type=entry["task_type"],
            paraphrased_request=entry["paraphrased_request"],
            categories=categories,
        ))
    return TaskDecomposition(subtasks=tuple(subtasks))


def parse_refined_response(text: str, task_type: str) -> CommandEnvelope:
    """Validate a refined response; prose around the JSON becomes speech.

    Pure function of its inputs: rejection can never have touched the
    scene. Plain text with no JSON is only acceptable for converse.
    """
    if task_type not in ("create", "animate", "fuse", "converse"):
        raise SchemaViolation(f"unknown task type {task_type!r}", "$")
    payload, prose = split_json_and_prose(text)
    if task_type == "converse":
        if payload is None:
            return CommandEnvelope("converse", None,
                                   speech_text=prose or text.strip())
        validate(payload, "converse")
        speech = payload["text"]
        if prose:
            speech = f"{speech} {prose}".strip()
        return CommandEnvelope("converse", payload, speech_text=speech)
    if payload is None:
        raise NoJSONFound(f"no JSON payload in {task_type} response")
    validate(payload, task_type)
    return CommandEnvelope(task_type, payload, speech_text=prose or None)


class Orchestrator:
    """Drives the two-stage flow for one session against a shared engine."""

    def __init__(self, engine, provider, history=None,
                 ledger: Optional[UsageLedger] = None,
                 request_prefix: str = ""):
        self.engine = engine
        self.provider = provider
        self.history = history if history is not None \
            else engine.context.history
        self.ledger = ledger if ledger is not None else UsageLedger()
        self.request_prefix = request_prefix
        self._counter = 0

    def handle_request(self, text: str) -> RequestResult:
        self._counter += 1
        request_id = f"{self.request_prefix}r{self._counter}"
        result = RequestResult(request_id=request_id)
        started = time.perf_counter()
        self.history.record(text)

        initial = build_initial_prompt(text, self.history.messages())
        try:
            reply = self.provider.complete(initial)
        except ProviderUnavailable as exc:
            self._warn(result, f"provider unavailable: {exc}")
            return self._finish(result, started)
        self.ledger.add(request_id, "initial",
                        reply.input_tokens, reply.output_tokens)
        try:
            decomposition = parse_initial_response(reply.text)
        except (NoJSONFound, SchemaViolation) as exc:
            self._warn(result, f"invalid initial response: {exc}")
            return self._finish(result, started)

        for subtask in decomposition.subtasks:
            try:
                self._run_subtask(request_id, subtask, result)
            except ProviderUnavailable as exc:
                self._warn(result,
                           f"provider unavailable mid-request, remaining "
                           f"subtasks dropped: {exc}")
                break
        return self._finish(result, started)

    def _run_subtask(self, request_id, subtask, result) -> None:
        payload = self._retrieve_context(subtask)
        try:
            refined = build_refined_prompt(subtask, payload,
                                           self.history.messages())
        except EngineError as exc:
            self._warn(result, f"refined prompt rejected: {exc}")
            return
        reply = self.provider.complete(refined)  # ProviderUnavailable bubbles
        self.ledger.add(request_id, "refined",
                        reply.input_tokens, reply.output_tokens)
        try:
            envelope = parse_refined_response(reply.text, subtask.task_type)
        except (NoJSONFound, SchemaViolation) as exc:
            self._warn(result,
                       f"invalid {subtask.task_type} response: {exc}")
            return
        try:
            outcome = self.engine.call(self._dispatch, envelope)
        except EngineError as exc:
            self._warn(result,
                       f"{subtask.task_type} command rejected: {exc}")
            return
        result.executed.append(envelope)
        result.outcomes.append(outcome)
        if envelope.speech_text:
            result.speech.append(envelope.speech_text)

    def _retrieve_context(self, subtask) -> ContextPayload:
        if not subtask.categories:
            return ContextPayload(sections={}, estimated_tokens=0)
        snapshot = self.engine.call(self.engine.snapshot)
        return self.engine.context.retrieve(
            subtask.categories,
            snapshot,
            prefabs=self.engine.creator.prefabs,
            room_proxies=self.engine.fusion.proxies,
            user=self.engine.user,
        )

    # runs on the engine loop; the single point where commands mutate state
    def _dispatch(self, envelope: CommandEnvelope) -> dict:
        engine = self.engine
        if envelope.task_type == "create":
            specs = engine.creator.interpret_creation(envelope.payload)
            ids = engine.creator.apply(specs)
            adjustments = engine.creator.enforce_support(
                ids, engine.fusion.proxies)
            return {
                "created": [engine.scene.get(i).name for i in ids],
                "adjustments": [a.to_dict() for a in adjustments],
            }
        if envelope.task_type == "animate":
            specs = parse_animation_request(envelope.payload)
            ids, events = engine.animator.schedule(specs, engine.tick_count)
            engine.events.extend(
                e for e in events if e["kind"] != "progressed")
            return {"scheduled": ids}
        if envelope.task_type == "fuse":
            actions = envelope.payload["actions"]
            # resolve everything first so a bad action applies nothing
            resolved = [engine.scene.id_of(a["object"]) for a in actions]
            for object_id, action in zip(resolved, actions):
                engine.fusion.attach_building_block(
                    object_id, action["block"],
                    hand=action.get("hand", "right"),
                    offset=action.get("offset", (0.0, 0.0, 0.0)))
            return {"applied": [a["block"] for a in actions]}
        return {}

    def _warn(self, result: RequestResult, message: str) -> None:
        result.warnings.append(message)
        self.engine.call(self.engine.warn, message)

    def _finish(self, result: RequestResult, started: float) -> RequestResult:
        result.elapsed_s = time.perf_counter() - started
        result.usage = self.ledger.totals(result.request_id)
        self.ledger.record_latency(result.request_id, result.elapsed_s)
        return result
