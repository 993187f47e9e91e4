"""Exception types shared across the toolkit."""


class GboostError(Exception):
    """Base class for all gboost errors."""


class FormatError(GboostError):
    """Malformed input text (FST text, symbol table, ARPA, JSON configs)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(GboostError):
    """A contract violation: unknown words, bad configs, broken graph state."""


class NoPathError(GboostError):
    """A sentence has no accepting path through the graph."""

    def __init__(self, message, word=None, position=None):
        super().__init__(message)
        self.word = word
        self.position = position
