class ExpoError(Exception):
    """Base error; `exit_code` is what the CLI exits with when it surfaces."""

    exit_code: int = 1
    rule: str = "error"

    def __init__(self, message: str, rule: str | None = None):
        super().__init__(message)
        self.message = message
        if rule is not None:
            self.rule = rule


class ExponentSetParseError(ExpoError, ValueError):
    exit_code = 2
    rule = "syntax"

    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))
        self.position = position
        self.text = text
        self.reason = message


class PreconditionError(ExpoError, ValueError):
    exit_code = 3
    rule = "precondition"


class BoundValidationError(PreconditionError):
    rule = "powerful-tail-bound"


class ConstantsMismatchError(ExpoError):
    exit_code = 3
    rule = "lemma-constants"


class ResourceCapError(ExpoError):
    exit_code = 4
    rule = "sieve-cap"
