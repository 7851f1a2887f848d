"""Error hierarchy shared by the library and the command line.

Every error carries a human-readable ``detail`` and the process ``exit_code``
the CLI uses when the error escapes a command.
"""


class PrivacyToolError(Exception):
    exit_code: int = 2

    def __init__(self, detail: str, exit_code: int = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class InputError(PrivacyToolError):
    """Malformed input, invalid parameter, label or index mismatch."""


class CapabilityError(PrivacyToolError):
    """The requested computation needs an enumerable database space."""


class UndefinedConversionError(InputError):
    """A parameter conversion divides by epsilon and epsilon is zero."""


class UndefinedPosteriorError(PrivacyToolError):
    """The transcript has zero marginal probability under the prior."""


class VerificationFailure(PrivacyToolError):
    exit_code = 1
