"""Exception hierarchy for zlab."""


class ZlabError(Exception):
    """Base class for all zlab errors."""


class NotHermitian(ZlabError, ValueError):
    pass


class NotPSD(ZlabError, ValueError):
    pass


class NotProjection(ZlabError, ValueError):
    pass


class NoConvergence(ZlabError, ArithmeticError):
    pass


class FunctionUndefined(ZlabError, ArithmeticError):
    pass


class ScalingOverflow(ZlabError, OverflowError):
    """Matrix too large for the scaling-and-squaring exponential."""


class DependentBasis(ZlabError, ValueError):
    pass


class TauOutOfRange(ZlabError, ValueError):
    pass


class RankChange(ZlabError, ValueError):
    pass


class BranchCut(ZlabError, ArithmeticError):
    pass


class SingularBlock(ZlabError, ArithmeticError):
    pass


class NotContraction(ZlabError, ValueError):
    pass


class SignMismatch(ZlabError, ValueError):
    pass


class NonContiguous(ZlabError, ValueError):
    pass


class DualPathMismatch(ZlabError, AssertionError):
    """Two independent evaluations of the same quantity disagree."""
