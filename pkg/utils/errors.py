class StubbornDynamicsError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(StubbornDynamicsError, ValueError):
    """Invalid parameter or input value."""


class DomainError(StubbornDynamicsError, ValueError):
    """Operation is undefined on this input (disconnected graph, missing stubborn agents, ...)."""


class GenerationError(StubbornDynamicsError, RuntimeError):
    """A randomized generator gave up after its retry budget."""


class CapExceededError(StubbornDynamicsError, RuntimeError):
    """A random walk ran past its step guard without being absorbed."""


class ModeError(StubbornDynamicsError, ValueError):
    """Requested computation mode is not available for this input size."""


class FormatError(StubbornDynamicsError, ValueError):
    """Malformed line in an edge-list, profile or opinions file."""

    def __init__(self, path: str, line_number: int, line: str, reason: str):
        self.path = path
        self.line_number = line_number
        self.line = line
        super().__init__(f"{path}:{line_number}: {reason}: {line.strip()!r}")
