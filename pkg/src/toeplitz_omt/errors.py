"""Exception hierarchy shared by all modules."""


class ToeplitzOMTError(Exception):
    """Base class for package errors."""


class ValidationError(ToeplitzOMTError, ValueError):
    """Input violates a documented precondition."""


class SingularMatrixError(ValidationError):
    """A matrix that must be positive definite is (numerically) singular."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ConvergenceError(ToeplitzOMTError):
    """An iterative method hit its iteration limit."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InfeasibleError(ToeplitzOMTError):
    """The optimization problem has no feasible point."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SolverError(ToeplitzOMTError):
    """A numerical solver failed (iteration limit, breakdown, unboundedness)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(ValidationError):
    """A file does not follow the documented schema.

    ``row`` is the 1-based line of a CSV file (header is line 1) and
    ``field`` the offending column or JSON key, when known.
    """

    def __init__(self, message, path=None, row=None, field=None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.path = path
        self.row = row
        self.field = field
