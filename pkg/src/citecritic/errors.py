"""Exception hierarchy shared across the package."""


class CiteCriticError(Exception):
    """Base class for all package errors."""


class SchemaError(CiteCriticError):
    """A file, record, or value violates its declared schema/invariants."""


class CannotCorruptError(CiteCriticError):
    """A corruptor cannot produce a negative distinct from its input."""


class AssemblyError(CiteCriticError):
    """Critique-example assembly failed (e.g. a negative pool is too small)."""


class TrainingError(CiteCriticError):
    """Critic training aborted (empty dataset, non-finite loss, ...)."""


class TransportError(CiteCriticError):
    """A remote call failed at the transport level after exhausting retries."""


class StatusError(CiteCriticError):
    """A remote call returned a non-2xx status after exhausting retries."""

    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"HTTP {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class DecodeError(CiteCriticError):
    """A remote response body could not be decoded."""


class ScriptError(CiteCriticError):
    """A mock generator in strict mode received an unkeyed prompt."""
