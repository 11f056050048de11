"""LLM providers: a transcript-driven mock, an authoring helper, and a
configurable HTTP chat-completion client."""

import json
import logging
import os
from dataclasses import dataclass

from ..context import estimate_tokens
from ..errors import ProviderUnavailable, TranscriptMiss
from .prompts import PromptEnvelope

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProviderResult:
    text: str
    input_tokens: int
    output_tokens: int


class ScriptedMock:
    """Deterministic provider keyed by envelope digest.

    A digest miss is a hard failure, never a silent fallback: replay
    fixtures must cover every call the pipeline makes.
    """

    def __init__(self, transcript):
        self._by_digest = {}
        for entry in transcript:
            self._by_digest[entry["envelope_digest"]] = entry

    @classmethod
    def from_file(cls, path) -> "ScriptedMock":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, envelope: PromptEnvelope) -> ProviderResult:
        digest = envelope.digest()
        entry = self._by_digest.get(digest)
        if entry is None:
            raise TranscriptMiss(
                f"no transcript entry for {envelope.stage} envelope "
                f"{digest[:12]}… (user_text starts: "
                f"{envelope.user_text[:80]!r})")
        return ProviderResult(
            text=entry["response_text"],
            input_tokens=int(entry["input_tokens"]),
            output_tokens=int(entry["output_tokens"]),
        )


class SequenceProvider:
    """Ordered canned responses; records a ScriptedMock-compatible
    transcript as it goes (that is how replay fixtures get authored)."""

    def __init__(self, responses):
        self._responses = list(responses)
        self._cursor = 0
        self.transcript = []

    def complete(self, envelope: PromptEnvelope) -> ProviderResult:
        if self._cursor >= len(self._responses):
            raise ProviderUnavailable(
                f"scripted sequence exhausted after {self._cursor} calls")
        text = self._responses[self._cursor]
        self._cursor += 1
        input_tokens = estimate_tokens(
            envelope.system_text + envelope.user_text)
        output_tokens = estimate_tokens(text)
        self.transcript.append({
            "envelope_digest": envelope.digest(),
            "stage": envelope.stage,
            "response_text": text,
            "input_tokens": input_tokens,
            "output_tokens": output_tokens,
        })
        return ProviderResult(text=text, input_tokens=input_tokens,
                              output_tokens=output_tokens)


class GenericHTTP:
    """Chat-completion client for any OpenAI-style endpoint.

    The API key is read from an environment variable named in the config,
    never from the config file itself. When ``structured_output`` is set
    the response schema is passed to the provider as well; behavior is
    identical either way because responses are always validated locally.
    """

    def __init__(self, endpoint: str, model: str, api_key_env: str = "",
                 timeout: float = 30.0, structured_output: bool = False):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.structured_output = structured_output

    def complete(self, envelope: PromptEnvelope) -> ProviderResult:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise ProviderUnavailable(
                    f"API key env var {self.api_key_env!r} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": envelope.system_text},
                {"role": "user", "content": envelope.user_text},
            ],
        }
        if self.structured_output:
            body["response_format"] = {
                "type": "json_schema",
                "json_schema": {"name": "scene_command", "strict": True,
                                "schema": envelope.schema},
            }
        try:
            response = requests.post(self.endpoint, json=body,
                                     headers=headers, timeout=self.timeout)
            response.raise_for_status()
            data = response.json()
            text = data["choices"][0]["message"]["content"]
        except Exception as exc:
            raise ProviderUnavailable(f"provider call failed: {exc}")
        usage = data.get("usage", {})
        return ProviderResult(
            text=text,
            input_tokens=int(usage.get(
                "prompt_tokens",
                estimate_tokens(envelope.system_text + envelope.user_text))),
            output_tokens=int(usage.get("completion_tokens",
                                        estimate_tokens(text))),
        )
