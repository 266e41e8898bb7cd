"""Exception hierarchy shared by all modules."""


class WarpeigError(Exception):
    """Base class for library errors."""


class NonFinite(WarpeigError, ArithmeticError):
    pass


class BudgetExceeded(WarpeigError, RuntimeError):
    pass


class StepUnderflow(WarpeigError, RuntimeError):
    pass


class NoBracket(WarpeigError, ValueError):
    pass


class DomainError(WarpeigError, ValueError):
    pass


class ParseError(WarpeigError, ValueError):
    """Malformed expression; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=0, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownFunction(ParseError):
    pass


class UnbalancedParens(ParseError):
    pass


class ValidationError(WarpeigError, ValueError):
    """A warping function failed one of the admissibility checks."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class ClosedManifold(DomainError):
    """Dirichlet problem requested on the whole of a closed manifold."""


class NoConvergence(WarpeigError, RuntimeError):
    pass


class Inconclusive(WarpeigError, RuntimeError):
    pass
