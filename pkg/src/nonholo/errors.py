"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`NonholoError`; the CLI maps :class:`ConfigError` to exit code 2 and
every other subclass to exit code 3.
"""


class NonholoError(Exception):
    """Base class for library errors."""


class ConfigError(NonholoError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class ConstraintViolation(NonholoError, ValueError):
    """A state is off the constraint manifold by more than the tolerance."""


class DomainViolation(NonholoError, ValueError):
    """A coupling function was evaluated outside its validity interval."""


class PerturbationPresent(NonholoError, ValueError):
    """An epsilon = 0 operation was requested on a perturbed system."""


class FibreSolveFailure(NonholoError, ArithmeticError):
    """The perturbed momentum fibre map could not be inverted."""


class NonConvergence(NonholoError, ArithmeticError):
    """An implicit step did not converge within the iteration budget."""


class StepSizeUnderflow(NonholoError, ArithmeticError):
    """The adaptive reference solver could not make progress."""


class NoSectionCrossing(NonholoError, ValueError):
    """The level set F(q3, 0) = a has no root in the search window."""


class NoClosedOrbit(NonholoError, ArithmeticError):
    """No return to the section was found within the time cap."""


class OmegaZero(NonholoError, ArithmeticError):
    """The subsystem orbit is an equilibrium; the torus has no theta-rotation."""


class NotARotation(NonholoError, ValueError):
    """Matrix is not in SO(3) within the tolerance."""


class HalfTurn(NonholoError, ArithmeticError):
    """Rotation angle equals pi: the logarithm is not unique."""


class DegenerateRotation(NonholoError, ArithmeticError):
    """Rotation angle is zero so the rotation plane is undefined."""


class NoCrossings(NonholoError, ValueError):
    """A trajectory never crosses the Poincare section."""


class InsufficientGrid(NonholoError, ValueError):
    """Too few valid grid points for a frequency-map verdict."""


class InsufficientData(NonholoError, ValueError):
    """Trajectory too short for a meaningful rotation-number fit."""
