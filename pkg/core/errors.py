"""Exceptions raised by the toolkit."""


class HardyToolkitError(Exception):
    """Base class for every toolkit error."""


# Input and precondition errors

class VanishingConstantTerm(HardyToolkitError, ValueError):
    """log or fractional power of a series whose constant term is (numerically) zero."""


class DuplicateNodes(HardyToolkitError, ValueError):
    """Interpolation nodes that coincide within tolerance."""


class PoleProximity(HardyToolkitError, ValueError):
    """Evaluation of a disc automorphism too close to its pole."""


class InvalidAutomorphism(HardyToolkitError, ValueError):
    """Automorphism parameter outside the open unit disc."""


class InvalidOrder(HardyToolkitError, ValueError):
    """Requested finite order is not a positive integer."""


class NotUnimodular(HardyToolkitError, ValueError):
    """A constant that must lie on the unit circle does not."""


class InsufficientDegree(HardyToolkitError, ValueError):
    """Series truncated below the degree a check needs."""


class InvalidEigenPair(HardyToolkitError, ValueError):
    """Eigenvalue pair off the circle, equal, or equal to 1."""


class PEqualsTwo(HardyToolkitError, ValueError):
    """Classification requested at p = 2, where the isometry group is larger."""


class FalsifierPrecondition(HardyToolkitError, ValueError):
    """Falsifier called on an automorphism of order at most three."""


# Computation outcomes

class DepthExceeded(HardyToolkitError):
    """Operator expression nests more compositions than the configured bound."""


class NotFiniteOrder(HardyToolkitError):
    """Automorphism does not have the requested finite order."""


class AnnihilationFails(HardyToolkitError):
    """(T - I)(T - l1 I)(T - l2 I) does not vanish for the given pair."""

    def __init__(self, residual: float, tolerance: float):
        super().__init__(
            f"annihilating cubic residual {residual:.3e} exceeds tolerance {tolerance:.1e}"
        )
        self.residual = residual
        self.tolerance = tolerance


class SpectrumMismatch(HardyToolkitError):
    """Matrix spectrum is not contained in {1, l1, l2}."""


class OrbitDegenerate(HardyToolkitError):
    """No point with a separated four-point orbit was found."""


class NoFamilyMatches(HardyToolkitError):
    """T^4 = I but none of the closed-form order-4 families verifies."""
