"""Exception hierarchy shared by all modules."""


class OLGError(Exception):
    """Base class for every error raised by the package."""


class NonPositiveConsumption(OLGError, ValueError):
    pass


class NonPositiveCapital(OLGError, ValueError):
    pass


class RegimeMismatch(OLGError, ValueError):
    """Parameters fall outside the regime a closed-form routine covers."""


class NonEquilibriumPath(OLGError):
    """A candidate path violates an equilibrium condition.

    ``t`` carries the failing period when it is known.
    """

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t})"
        super().__init__(message)


class BracketFailure(NonEquilibriumPath):
    """The Euler residual does not change sign on the admissible interval."""


class MultipleRoots(NonEquilibriumPath):
    """Several admissible roots exist and the selection policy forbids choosing."""

    def __init__(self, message, roots, t=None):
        self.roots = list(roots)
        super().__init__(message, t=t)


class PatternViolation(OLGError):
    """A two-cycle allocation breaks the even/odd alternation pattern."""

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t})"
        super().__init__(message)


class HorizonExceeded(OLGError, IndexError):
    pass


class InvalidInput(OLGError, ValueError):
    pass


class InfeasibleTerminal(OLGError):
    """No feasible plan reaches the prescribed terminal holdings."""


class ConfigError(OLGError):
    """Bad run configuration; ``field`` and ``line`` locate the problem."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)
