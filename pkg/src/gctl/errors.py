"""Shared exception types."""


class FormulaSyntaxError(ValueError):
    """Formula text does not conform to the grammar."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ModelSyntaxError(ValueError):
    """Model file does not conform to the format."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ValueError):
    """A structure violates its invariants; carries the itemized report."""

    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


class CapacityError(RuntimeError):
    """A size budget (flat states, machine copies) would be exceeded."""


class OracleLimitError(RuntimeError):
    """The enumeration oracle refused the input or failed to stabilize."""
