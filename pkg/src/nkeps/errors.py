"""Exception hierarchy shared across the package."""


class NkepsError(Exception):
    """Base class for every error raised by nkeps."""


class ValidationError(NkepsError):
    """A system, policy or plan violates a structural invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CaseFormatError(NkepsError):
    """A case, plan or report file could not be parsed."""


class SizeGuardError(NkepsError):
    """Contingency enumeration would exceed the configured limit."""


class AuditError(NkepsError):
    """Post-solve audit of the interdiction oracle failed."""


class BadDualError(NkepsError):
    """A dual solution does not reproduce the primal optimum."""


class StallError(NkepsError):
    """A cutting-plane loop keeps regenerating cuts it already holds."""


class SolverError(NkepsError):
    """The LP/MILP engine returned a status the caller cannot continue from."""

    def __init__(self, status, message=""):
        self.status = status
        super().__init__(message or f"solver returned status {status}")
