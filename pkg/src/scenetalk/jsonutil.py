"""Canonical JSON formatting and tolerant JSON extraction.

Canonical form: sorted keys, compact separators, floats rendered with a
fixed 6-decimal format. Every snapshot, event line, wire message and
prompt digest goes through this, which is what makes golden tests
byte-identical across runs and platforms.
"""

import json
import math

from .errors import NoJSONFound

_DECODER = json.JSONDecoder()


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"non-finite float in canonical JSON: {value!r}")
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def canonical_json(value) -> str:
    """Serialize ``value`` to the canonical JSON string."""
    parts = []
    _write(value, parts)
    return "".join(parts)


def _write(value, parts) -> None:
    if value is None:
        parts.append("null")
    elif value is True:
        parts.append("true")
    elif value is False:
        parts.append("false")
    elif isinstance(value, int):
        parts.append(str(value))
    elif isinstance(value, float):
        parts.append(format_float(value))
    elif isinstance(value, str):
        parts.append(json.dumps(value))
    elif isinstance(value, dict):
        parts.append("{")
        first = True
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"non-string key: {key!r}")
            if not first:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _write(value[key], parts)
            first = False
        parts.append("}")
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(",")
            _write(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"not canonical-JSON serializable: {type(value)!r}")


def extract_first_json(text: str):
    """Find the first balanced JSON object/array inside free-form text.

    Returns ``(value, start, end)``. Fenced blocks and surrounding prose are
    tolerated; raises NoJSONFound when nothing parseable exists.
    """
    for i, ch in enumerate(text):
        if ch not in "{[":
            continue
        try:
            value, offset = _DECODER.raw_decode(text, i)
        except ValueError:
            continue
        return value, i, offset
    raise NoJSONFound("no JSON object or array in response text")


def split_json_and_prose(text: str):
    """Split a model response into (first JSON value or None, prose text).

    Only the first balanced JSON chunk is kept as payload; later chunks are
    dropped. The prose remainder is scrubbed of stray structural braces so
    it is safe to speak/display as plain text.
    """
    payload = None
    remainder = text
    prose_parts = []
    while True:
        try:
            value, start, end = extract_first_json(remainder)
        except NoJSONFound:
            prose_parts.append(remainder)
            break
        prose_parts.append(remainder[:start])
        if payload is None:
            payload = value
        remainder = remainder[end:]
    prose = "".join(prose_parts)
    for ch in "{}[]":
        prose = prose.replace(ch, "")
    return payload, " ".join(prose.split())
