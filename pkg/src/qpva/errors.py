"""Exception hierarchy. Each class carries the CLI exit code for its failure class."""


class QPVAError(Exception):
    exit_code = 3


class ContextError(QPVAError):
    """Operands live in different charts / declared contexts."""


class ParityError(QPVAError):
    pass


class IncompleteMapError(QPVAError):
    pass


class DegreeError(QPVAError):
    pass


class UnsupportedInputError(QPVAError):
    pass


class PreconditionError(QPVAError):
    pass


class ShapeError(QPVAError):
    pass


class SingularMapError(QPVAError):
    pass


class ParseError(QPVAError):
    exit_code = 2

    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
            if text is not None:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class NumericGuardError(QPVAError):
    exit_code = 4


class BlowUpError(NumericGuardError):
    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class SingularLocusError(NumericGuardError):
    def __init__(self, message, sample=None, time=None):
        super().__init__(message)
        self.sample = sample
        self.time = time
