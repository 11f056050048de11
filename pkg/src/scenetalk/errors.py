"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine-level errors."""


# scene graph

class UnknownObject(EngineError):
    pass


class DuplicateName(EngineError):
    pass


class UnknownParent(EngineError):
    pass


class CycleDetected(EngineError):
    pass


class NotFound(EngineError):
    pass


class AmbiguousName(EngineError):
    pass


# context library

class UnknownCategory(EngineError):
    pass


class UnknownProperty(EngineError):
    pass


# object creation

class MissingSource(EngineError):
    pass


class UnknownPrefab(EngineError):
    pass


# animation

class UnknownUnit(EngineError):
    pass


class MissingTarget(EngineError):
    pass


class DuplicateActiveId(EngineError):
    pass


# reality fusion

class UnknownBlock(EngineError):
    pass


class SchemaViolation(EngineError):
    """Structured document failed validation; ``path`` locates the field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# LLM wrapper

class NoJSONFound(EngineError):
    pass


class CategoryMismatch(EngineError):
    pass


class ProviderUnavailable(EngineError):
    pass


class TranscriptMiss(EngineError):
    """Scripted provider saw an envelope digest absent from its transcript."""


# gateway

class FrameTooLarge(EngineError):
    pass


class TruncatedFrame(EngineError):
    pass


class ConfigInvalid(EngineError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class BindFailure(EngineError):
    pass


class FixtureMissing(EngineError):
    pass


class GoldenMismatch(EngineError):
    """Replay output drifted from the pinned golden; ``path`` is the first diff."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
