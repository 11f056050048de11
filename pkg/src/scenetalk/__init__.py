"""scenetalk: a headless scene-orchestration engine.

Natural-language requests go through a two-stage LLM pipeline that emits
schema-validated JSON commands; deterministic interpreters turn those
commands into scene objects, animations and mixed-reality interactions.
"""

__version__ = "0.1.0"
