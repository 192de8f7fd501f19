"""Exception hierarchy shared by the package."""


class LagrangeKitError(Exception):
    pass


class ParseError(LagrangeKitError, ValueError):
    """Raised for malformed Lagrangian text.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class LagrangianSyntaxError(ParseError):
    pass


class IndexOutOfRange(ParseError):
    pass


class UnknownFunction(ParseError):
    pass


class DomainError(LagrangeKitError, ArithmeticError):
    """Evaluation left the domain of log, sqrt, division or real powers."""

    def __init__(self, message, subexpression=None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message}: {subexpression}"
        super().__init__(message)


class DegenerateLagrangian(LagrangeKitError):
    """The fiber Hessian is (numerically) singular at the evaluation point."""


class NotHomogeneous(LagrangeKitError):
    pass


class ZeroLagrangianValue(LagrangeKitError):
    pass
