"""Exception hierarchy shared by the library, the CLI and the HTTP service."""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_PARTIAL_FAILURE = 3


class FairlineError(Exception):
    """Base class for every domain failure."""

    exit_code = EXIT_FAILURE

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ScenarioError(FairlineError):
    """Scenario or vehicle parameters violate a bound.

    ``violations`` holds one ``"field: message"`` string per offending field.
    """

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, violations: list[str] | str):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ParameterInconsistencyError(FairlineError):
    exit_code = EXIT_CONFIG_ERROR


class InfeasibleRatesError(FairlineError):
    """A RateSet lies outside the domain of the AoI model."""

    def __init__(self, link: int, detail: str):
        self.link = link
        super().__init__(f"link {link}: {detail}")


class OperatorUnavailableError(FairlineError):
    exit_code = EXIT_CONFIG_ERROR


class LlmTransportError(FairlineError):
    """HTTP failure, timeout or malformed completion envelope."""


class LlmParseError(FairlineError):
    """The completion text carried no usable vector."""


class ModelValidityWarning(UserWarning):
    """A formula was evaluated outside its range of validity and clamped."""
