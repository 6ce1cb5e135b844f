"""Exception hierarchy.

Every error raised by the library derives from :class:`CubicSplitError`.
Input problems (bad field coefficients, bad config) derive from
:class:`InputError` so the CLI can map them to exit code 2.
"""


class CubicSplitError(Exception):
    """Base class for library errors."""


class InputError(CubicSplitError, ValueError):
    """Invalid user-supplied data."""


class InternalFault(CubicSplitError, RuntimeError):
    """A numerical or logical fault that should not happen for valid input."""


# cubic field
class RationalRootFound(InputError):
    pass


class NonNegativeDiscriminant(InputError):
    pass


class ZeroA2(InputError):
    pass


class ZeroElement(CubicSplitError, ZeroDivisionError):
    pass


class FieldMismatch(CubicSplitError, ValueError):
    pass


# koch
class SearchBudgetExceeded(InternalFault):
    pass


class NonPositiveGamma(InputError):
    pass


# resonances
class HalfIntegerTie(InternalFault):
    pass


class DeltaOutOfRange(InternalFault):
    pass


class DegenerateProjection(InternalFault):
    pass


class EmptyPrimitiveSet(InternalFault):
    pass


# splitting
class NonPositiveEps(InputError):
    pass


class NonPositiveInputs(InputError):
    pass


class CoincidentDescriptors(CubicSplitError, ValueError):
    pass


class InsufficientPrimitiveCut(CubicSplitError, ValueError):
    pass


# cli / config
class ConfigParseError(InputError):
    pass


class UnknownPreset(InputError):
    pass
