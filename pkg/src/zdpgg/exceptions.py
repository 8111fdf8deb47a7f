"""Exception hierarchy for zdpgg."""


class ZDError(Exception):
    """Base class for all zdpgg errors."""


class InvalidGame(ZDError, ValueError):
    """The stage-game parameters are outside the supported regime."""


class DegenerateFactor(ZDError, ValueError):
    """The multiplication factor makes a formula degenerate (r <= 1)."""


class SingularStrategy(ZDError, ValueError):
    """The requested control point is the singular repeat-own-move strategy."""


class _Infeasible(ZDError, ValueError):
    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality


class InfeasiblePinning(_Infeasible):
    """A pinning control point lies outside the feasible region.

    ``inequality`` names the violated constraint.
    """


class InfeasibleExtortion(_Infeasible):
    """Extortion parameters (chi, phi) violate a probability constraint.

    ``inequality`` names the violated constraint.
    """


class NonErgodicChain(ZDError, RuntimeError):
    """The Markov chain has more than one closed class.

    Long-run payoffs then depend on the initial distribution and are not
    reported.
    """

    def __init__(self, message, closed_classes=None):
        super().__init__(message)
        self.closed_classes = closed_classes


class DeterminantMismatch(ZDError, RuntimeError):
    """The determinant route and the stationary solve disagree."""
