"""Deterministic replay of scripted sessions against pinned goldens.

A task script drives user requests, ticks and client interactions through
an inline engine with a ScriptedMock provider; the resulting document
(final snapshot + event log + warnings + usage) must match the pinned
golden byte for byte.
"""

import json
from pathlib import Path
from typing import Optional

from ..creation import PrefabRegistry
from ..engine import Engine
from ..errors import FixtureMissing, GoldenMismatch
from ..fusion import HandPose
from ..jsonutil import canonical_json
from ..wrapper import Orchestrator, ScriptedMock

REPLAY_SCHEMA_VERSION = 1


def _load_json(path: Path, what: str):
    if not path.exists():
        raise FixtureMissing(f"{what} not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_script(transcript_path, script_path, provider=None) -> dict:
    """Execute a task script; returns the replay document plus a report.

    ``provider`` overrides the ScriptedMock (fixture authoring runs the
    same steps with a SequenceProvider and records the transcript)."""
    script_path = Path(script_path)
    script = _load_json(script_path, "task script")
    if provider is None:
        provider = ScriptedMock(_load_json(Path(transcript_path),
                                           "transcript fixture"))
    base = script_path.parent

    def resolve(rel) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else base / p

    prefabs = None
    if script.get("prefabs"):
        prefabs = PrefabRegistry.from_file(resolve(script["prefabs"]))
    engine = Engine(prefabs=prefabs,
                    timestep=float(script.get("timestep", 0.02)))
    if script.get("room_scan"):
        engine.fusion.load_room_scan(
            _load_json(resolve(script["room_scan"]), "room scan"))
    if script.get("head"):
        engine.user.set_head(script["head"]["position"],
                             script["head"].get("euler", (0.0, 0.0, 0.0)))

    orchestrator = Orchestrator(engine, provider)
    requests = []
    for i, step in enumerate(script.get("steps", ())):
        if "request" in step:
            result = orchestrator.handle_request(step["request"])
            requests.append({
                "request_id": result.request_id,
                "text": step["request"],
                "usage": result.usage,
                "latency_s": result.elapsed_s,
                "warnings": list(result.warnings),
                "outcomes": result.outcomes,
            })
        elif "ticks" in step:
            engine.run_ticks(int(step["ticks"]))
        elif "pick" in step:
            engine.fusion.pick(step["pick"]["object"],
                               step["pick"].get("hand", "right"))
        elif "release" in step:
            engine.fusion.release(step["release"].get("object")
                                  if isinstance(step["release"], dict)
                                  else None)
        elif "hand_pose" in step:
            pose = step["hand_pose"]
            engine.fusion.update_hand_pose(HandPose.synthetic(
                hand=pose.get("hand", "right"),
                palm_position=tuple(pose["palm_position"]),
                palm_orientation=tuple(pose.get("palm_orientation",
                                                (0.0, 0.0, 0.0))),
                timestamp=float(pose["timestamp"])))
        elif "stop" in step:
            engine.animator.stop(step["stop"], engine.tick_count)
            engine.events.extend(engine.animator.drain_side_events())
        else:
            raise FixtureMissing(f"unknown step shape at steps[{i}]: "
                                 f"{sorted(step)}")

    document = {
        "schema_version": REPLAY_SCHEMA_VERSION,
        "final_snapshot": engine.snapshot(),
        "events": engine.events,
        "warnings": [w["message"] for w in engine.warnings],
        "usage": [orchestrator.ledger.totals(rid)
                  for rid in orchestrator.ledger.request_ids()],
    }
    report = {
        "ticks": engine.tick_count,
        "objects": len(engine.scene),
        "events": len(engine.events),
        "requests": requests,
    }
    return {"document": document, "report": report}


def replay(transcript_path, script_path, golden_path=None,
           write_golden: bool = False) -> dict:
    """Compare a scripted run against its golden. Returns the report;
    raises GoldenMismatch (with the first diverging path) on drift."""
    script_path = Path(script_path)
    outcome = run_script(transcript_path, script_path)
    document = outcome["document"]
    produced = canonical_json(document)

    if golden_path is None:
        script = _load_json(script_path, "task script")
        rel = script.get("golden")
        if rel is None:
            raise FixtureMissing(f"script {script_path} names no golden")
        golden_path = Path(rel)
        if not golden_path.is_absolute():
            golden_path = script_path.parent / golden_path
    golden_path = Path(golden_path)

    if write_golden:
        golden_path.parent.mkdir(parents=True, exist_ok=True)
        golden_path.write_text(produced, encoding="utf-8")
        outcome["report"]["golden_written"] = str(golden_path)
        return outcome["report"]

    if not golden_path.exists():
        raise FixtureMissing(f"golden not found: {golden_path}")
    pinned = golden_path.read_text(encoding="utf-8")
    if produced != pinned:
        try:
            pinned_doc = json.loads(pinned)
        except ValueError:
            raise GoldenMismatch("golden is not valid JSON", "$")
        path = first_divergence(pinned_doc, document) or "$"
        raise GoldenMismatch(
            f"replay output drifted from {golden_path.name}", path)
    outcome["report"]["golden"] = str(golden_path)
    return outcome["report"]


def first_divergence(expected, actual, path: str = "$") -> str:
    """Structural walk returning the path of the first differing node."""
    if type(expected) is not type(actual):
        # ints and floats compare canonically as distinct types
        return path
    if isinstance(expected, dict):
        for key in sorted(set(expected) | set(actual)):
            if key not in expected or key not in actual:
                return f"{path}.{key}"
            sub = first_divergence(expected[key], actual[key],
                                   f"{path}.{key}")
            if sub is not None:
                return sub
        return None if expected == actual else path
    if isinstance(expected, list):
        for i in range(max(len(expected), len(actual))):
            if i >= len(expected) or i >= len(actual):
                return f"{path}[{i}]"
            sub = first_divergence(expected[i], actual[i], f"{path}[{i}]")
            if sub is not None:
                return sub
        return None
    if isinstance(expected, float) or isinstance(actual, float):
        if canonical_json(expected) != canonical_json(actual):
            return path
        return None
    return None if expected == actual else path
