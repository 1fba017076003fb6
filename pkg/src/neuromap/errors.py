class NeuromapError(Exception):
    exit_code = 1


class ParseError(NeuromapError):
    exit_code = 2

    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line


class ValidationError(NeuromapError, ValueError):
    exit_code = 2


class InfeasibleError(NeuromapError):
    """A mapping stage cannot satisfy the hardware constraints."""

    exit_code = 3


class SimulationIncomplete(NeuromapError):
    exit_code = 4


class StageError(NeuromapError):
    """Wraps a failure with the pipeline stage it came from."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
