"""Exception and warning types shared across the toolkit."""

from __future__ import annotations


class AgentprintError(Exception):
    """Base class for all toolkit errors."""


class ParseError(AgentprintError):
    """Input is not well-formed JSON. Carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class SchemaError(AgentprintError):
    """Input is valid JSON but violates the episode schema."""


class ConfigError(AgentprintError):
    """A run configuration is inconsistent or incomplete."""


class TrainError(AgentprintError):
    """A classifier cannot be trained on the given dataset."""


class EvalError(AgentprintError):
    """An evaluation protocol received unusable inputs."""


class ModelFormatError(AgentprintError):
    """A persisted model file is unreadable or incompatible."""


class TraceWarning(UserWarning):
    """Non-fatal validation finding on a trace or corpus."""
