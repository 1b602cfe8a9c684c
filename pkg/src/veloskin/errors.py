"""Exception types shared across the package.

Kept in one module so that rig validation, file loading and the CLI can
raise and catch the same classes without import cycles.
"""


class VeloskinError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# geometry


class DegenerateDirectionError(VeloskinError):
    """A direction vector has magnitude below the degeneracy threshold."""


class ParallelAxesError(VeloskinError):
    """Primary and secondary axes are parallel; the frame is underdetermined."""


# ---------------------------------------------------------------------------
# rig


class CyclicHierarchyError(VeloskinError):
    """A bone is its own ancestor."""


class MultipleRootsError(VeloskinError):
    """The skeleton has more than one parentless bone."""


class ForwardParentReferenceError(VeloskinError):
    """A bone's parent index does not precede it in storage order."""


# ---------------------------------------------------------------------------
# kinematics


class EmptyTrackError(VeloskinError):
    """An animation track holds zero keyframes."""


class NonPositiveDtError(VeloskinError):
    """A finite-difference step was requested with dt <= 0."""


class EmptyHistoryError(VeloskinError):
    """Velocity smoothing was requested over an empty history."""


# ---------------------------------------------------------------------------
# scene files


class ParseError(VeloskinError):
    """A scene document is structurally invalid. The message carries the
    offending field path."""


class VersionMismatchError(VeloskinError):
    """A scene document declares an unsupported format version."""


class ReferentialIntegrityError(VeloskinError):
    """An index inside a scene document points outside the referenced table."""
