"""Exception types raised across hessianlab."""


class HessianLabError(Exception):
    """Base class for all library errors."""


class ExprSyntaxError(HessianLabError, ValueError):
    def __init__(self, position, expected, source=""):
        self.position = position
        self.expected = tuple(sorted(expected))
        self.source = source
        exp = ", ".join(repr(e) for e in self.expected)
        super().__init__(f"syntax error at position {position}: expected one of {exp}")


class UnknownIdentifier(HessianLabError, ValueError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier {name!r}" + ("" if position is None else f" at position {position}"))


class VariableOutOfRange(HessianLabError, ValueError):
    def __init__(self, index, n):
        self.index = index
        self.n = n
        super().__init__(f"variable x{index} out of range for dimension n={n}")


class DomainError(HessianLabError, ArithmeticError):
    def __init__(self, node, reason):
        self.node = node
        self.reason = reason
        super().__init__(f"{reason} (at {node})")


class SingularMatrix(HessianLabError, ValueError):
    pass


class DivisionByZeroValuePart(HessianLabError, ZeroDivisionError):
    pass


class OrderExceeded(HessianLabError, ValueError):
    pass


class NonConvexAt(HessianLabError):
    def __init__(self, point, min_eigenvalue):
        self.point = tuple(float(p) for p in point)
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(f"Hessian not positive definite at {self.point} (smallest eigenvalue ~ {self.min_eigenvalue:.3e})")


class UndefinedForDimensionOne(HessianLabError):
    pass


class DegenerateGradient(HessianLabError):
    pass


class StencilOutsideDomain(HessianLabError):
    pass
