"""Exception hierarchy shared by all pipeline stages."""


class ColoringError(Exception):
    pass


# instance model

class PaletteTooSmall(ColoringError):
    def __init__(self, node, size=None, degree=None):
        self.node = node
        msg = f"palette of node {node} too small"
        if size is not None:
            msg += f" (p={size}, d={degree})"
        super().__init__(msg)


class MalformedEdge(ColoringError):
    pass


class ConflictingAssignment(ColoringError):
    pass


class ColorNotInPalette(ColoringError):
    pass


class Infeasible(ColoringError):
    pass


class SelfReducibilityViolation(ColoringError):
    pass


# hashing / derandomization

class ParameterOverflow(ColoringError):
    pass


class LenOutOfRange(ColoringError):
    pass


class PrefixTooLong(ColoringError):
    pass


class TooLargeToEnumerate(ColoringError):
    pass


# round accounting

class BandwidthModelViolation(ColoringError):
    pass


# bucket coloring: both signal broken invariants, never expected on valid input

class NoFeasibleChild(ColoringError):
    pass


class ResidualConflict(ColoringError):
    pass


# driver / cli

class MaxDegreeExceeded(ColoringError):
    pass


class InvalidSpec(ColoringError):
    pass


class ParseError(ColoringError):
    pass
