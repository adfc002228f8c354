"""Exception hierarchy shared across the package."""


class BrownRegError(Exception):
    """Base class for all package errors."""


# -- input validation ------------------------------------------------------

class InvalidInput(BrownRegError, ValueError):
    pass


class MissingCase(InvalidInput):
    pass


class RaggedJ(InvalidInput):
    pass


class NonFiniteValue(InvalidInput):
    pass


class InvalidSpec(InvalidInput):
    """A penalty, solver or config field violates its invariant.

    ``field`` names the offending field so that callers (the CLI) can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.detail = message


class GridMismatch(InvalidInput):
    pass


# -- numerical -------------------------------------------------------------

class NonDifferentiableAtZero(BrownRegError, ArithmeticError):
    def __init__(self, k):
        super().__init__(f"penalty not differentiable at beta[{k}] = 0")
        self.k = k


class TiedFusedPair(BrownRegError, ArithmeticError):
    def __init__(self, k, other):
        super().__init__(f"fused penalty not differentiable at beta[{k}] == beta[{other}]")
        self.k = k
        self.other = other


class GOverflow(BrownRegError, OverflowError):
    pass


class ZeroDenominator(BrownRegError, ArithmeticError):
    def __init__(self, k):
        super().__init__(f"closed-form denominator vanishes for coordinate {k}")
        self.k = k


class SingularSystem(BrownRegError, ArithmeticError):
    pass


class SingularDesign(BrownRegError, ArithmeticError):
    pass


class NoConsistentBranch(BrownRegError, ArithmeticError):
    def __init__(self, k):
        super().__init__(f"no sign branch of coordinate {k} is self-consistent")
        self.k = k


class NoInteriorMinimum(BrownRegError, ArithmeticError):
    pass


class NegativePsi(BrownRegError, ArithmeticError):
    pass


class UnboundedF(BrownRegError, ArithmeticError):
    pass
