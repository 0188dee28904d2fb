"""Exception types shared across the package."""
from __future__ import annotations


class DdeflowError(Exception):
    """Base class for all package-specific errors."""


class InvalidKind(DdeflowError):
    """Operation applied to a nonlinearity kind it does not support."""


class NotFiveRoots(DdeflowError):
    """Root count of -mu*x + f(x) differs from five."""

    def __init__(self, count: int, roots=None):
        self.count = count
        self.roots = roots
        super().__init__(f"expected 5 equilibria, found {count}")


class NonFinite(DdeflowError):
    """Integration produced a non-finite sample."""

    def __init__(self, first_index: int):
        self.first_index = first_index
        super().__init__(f"non-finite sample first appears at node index {first_index}")


class OutOfRange(DdeflowError):
    """Requested time lies outside the computed trajectory."""


class GridMismatch(DdeflowError):
    """Segments or trajectories with incompatible grid resolutions."""


class ZeroSegment(DdeflowError):
    """Segment numerically indistinguishable from the zero function."""


class NoDerivative(DdeflowError):
    """Operation requires node derivatives that are not available."""


class EigenFail(DdeflowError):
    """Dense eigenvalue computation broke down."""


class NoCrossing(DdeflowError):
    """No section crossing found in the search window."""


class TangentCrossing(DdeflowError):
    """Section crossing is tangential (transversality failure)."""


class EtaNotInY(DdeflowError):
    """Direction passed to the return-map derivative is not in the section hyperplane."""


class NoConvergence(DdeflowError):
    """Newton iteration failed to converge."""

    def __init__(self, residual: float, steps: int):
        self.residual = residual
        self.steps = steps
        super().__init__(f"no convergence after {steps} steps, residual {residual:.3e}")


class NotMinimal(DdeflowError):
    """Found period is an integer multiple of a smaller period."""


class WrongUnstableCount(DdeflowError):
    """Orbit does not have the unstable multiplier count required here."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} unstable multipliers, got {got}")


class NotNested(DdeflowError):
    """Planar curves are not nested as required."""


class DegenerateCurve(DdeflowError):
    """Planar curve is too short or not simple."""


class MultiValued(DdeflowError):
    """Graph table would be multi-valued at the given keys."""

    def __init__(self, key_a, key_b, value_gap: float):
        self.key_a = key_a
        self.key_b = key_b
        self.value_gap = value_gap
        super().__init__(
            f"keys {key_a} and {key_b} are close but their segments differ by {value_gap:.3e}"
        )


class NonhyperbolicWarning(UserWarning):
    """A nontrivial Floquet multiplier sits inside the unit-circle tolerance band."""
