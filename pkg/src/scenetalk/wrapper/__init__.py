"""Two-stage LLM pipeline: prompts, providers, parsing, dispatch."""

from .pipeline import Orchestrator, RequestResult, UsageLedger  # noqa: F401
from .providers import GenericHTTP, ScriptedMock, SequenceProvider  # noqa: F401
