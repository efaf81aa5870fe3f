"""Exception hierarchy shared across the package."""


class RouthError(Exception):
    """Base class for all errors raised by routhred."""


class ParseError(RouthError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownFunctionError(ParseError):
    pass


class EvalError(RouthError):
    pass


class UnboundVariableError(EvalError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class DomainError(EvalError):
    def __init__(self, node, reason):
        self.node = node
        super().__init__(f"domain error in {node}: {reason}")


class PreconditionError(RouthError):
    pass


class SingularHessianError(RouthError):
    def __init__(self, point, condition):
        self.point = dict(point)
        self.condition = condition
        super().__init__(
            f"velocity Hessian is singular at {self.point} (condition estimate {condition:.3g})"
        )


class EmptyConstraintSetError(RouthError):
    """The momentum constraint reduces to a nonzero constant."""

    def __init__(self, residual, value):
        self.residual = residual
        self.value = value
        super().__init__(
            f"momentum constraint {residual} = 0 has no solution (residual is the constant {value:g})"
        )


class BranchAmbiguityError(RouthError):
    pass


class UnsupportedReductionError(RouthError):
    pass


class NoRootError(RouthError):
    pass


class SymmetryViolationError(PreconditionError):
    """The Lagrangian depends on the coordinate declared cyclic."""

    def __init__(self, coordinate, violation):
        self.coordinate = coordinate
        self.violation = violation
        super().__init__(f"Lagrangian depends on {coordinate}: derivative along d/d{coordinate} is {violation}")
