"""Exception types shared across the package."""


class RelherError(Exception):
    """Base class for errors raised by this package."""


class ParseError(RelherError):
    """Syntax error in a domain/problem file, with source position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class ValidationError(RelherError):
    """Semantic error: undeclared predicate/object, arity mismatch, etc."""


class InapplicableActionError(RelherError):
    """Raised when applying an action whose precondition does not hold."""


class GoalComponentTooLargeError(RelherError):
    """A goal-dependency component exceeds the subgoal enumeration cap."""


class VocabularyMismatchError(RelherError):
    """Checkpoint or input uses a vocabulary unknown to the network."""


class CheckpointFormatError(RelherError):
    """Checkpoint blob is malformed or has an unsupported version."""
