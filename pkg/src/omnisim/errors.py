"""Exception hierarchy shared by all omnisim modules.

The CLI maps these onto exit codes: validation failures exit 2,
numerical failures exit 3, guard refusals exit 4.
"""


class OmnisimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OmnisimError):
    """Invalid input: bad scene data, malformed files, out-of-range values."""


class SideUndefinedError(ValidationError):
    """A point lies in the panel plane, so its side cannot be classified."""


class InvalidSceneError(ValidationError):
    """The scene itself is inconsistent (e.g. the BS sits in the panel plane)."""


class NumericalError(OmnisimError):
    """A computation cannot proceed for numerical reasons."""


class TooManyUsersError(NumericalError):
    """Zero-forcing requires no more users than BS antennas."""


class RankDeficientChannelError(NumericalError):
    """The channel Gram matrix is singular or too ill-conditioned to invert."""


class SearchSpaceError(OmnisimError):
    """Refused: the exhaustive search space exceeds the hard guard."""
