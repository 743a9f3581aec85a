"""Exception types shared across the package."""


class DegenerateSystemError(RuntimeError):
    """Raised when orthogonalization drops every measurement row."""


class DegenerateIterateError(RuntimeError):
    """Raised when an iterate cannot be renormalized (zero trace or no
    positive spectrum left after thresholding)."""


class InvariantViolation(RuntimeError):
    """Raised when a per-sweep runtime check fails (Hermiticity drift or an
    orthonormalized constraint not satisfied). Indicates a convention bug,
    not bad data."""


class SchemaError(ValueError):
    """Raised when a JSON input file does not match the declared format."""
