"""Exception types shared across the package."""


class SknetError(Exception):
    """Base class for all package errors."""


class InvalidInput(SknetError, ValueError):
    """Input violates a documented precondition."""


class DimensionMismatch(InvalidInput):
    pass


class OutOfBranch(SknetError, ValueError):
    """Principal logarithm requested outside its certified domain."""


class BudgetExceeded(SknetError):
    """Enumeration would exceed the configured node budget."""


class SynthesisGap(SknetError):
    """A net shell needed for synthesis is empty."""

    def __init__(self, shell: int, message: str | None = None):
        self.shell = shell
        super().__init__(message or f"shell {shell} has no elements")


class CertificateViolation(SknetError, ArithmeticError):
    """A proven bound failed numerically; indicates a numerics bug."""
