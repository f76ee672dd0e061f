"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input violates a documented precondition (bad shape, empty class, ...)."""


class ScoreFileError(DomainError):
    """A trial score file failed to validate; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
