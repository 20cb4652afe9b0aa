"""Exception hierarchy shared by all spst modules."""


class SpStError(Exception):
    """Base class for every error raised by this package."""


# linear algebra
class SingularMatrix(SpStError):
    pass


class NotPositiveDefinite(SpStError):
    pass


class NoConvergence(SpStError):
    pass


class RankDeficient(SpStError):
    pass


# geometry
class OddDimension(SpStError):
    pass


class ShapeMismatch(SpStError):
    pass


class InfeasibleBase(SpStError):
    pass


class NotTangent(SpStError):
    pass


class CayleyPoleHit(SpStError):
    """The Cayley transform hit (numerically) a pole; the caller should shrink the step."""


# problems
class NotSymmetric(SpStError):
    pass


class BadGaussParams(SpStError):
    pass


class PairingFailure(SpStError):
    pass
