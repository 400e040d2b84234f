"""Exception types shared across the package."""


class LesionBenchError(Exception):
    """Base class for all package-specific errors."""


# --- volume / mask I/O ------------------------------------------------------

class NiftiFormatError(LesionBenchError):
    """Malformed or unsupported NIfTI-1 stream (bad magic, datatype, payload)."""


class NonBinaryMask(LesionBenchError):
    """A volume expected to be a binary mask contains non-{0,1} samples."""


# --- grid / metric contracts ------------------------------------------------

class GridMismatch(LesionBenchError):
    """Two volumes that must share a grid differ in dims or spacing."""


class EmptyStack(LesionBenchError):
    """A vote stack with zero masks."""


# --- ranking ----------------------------------------------------------------

class IncompleteMatrix(LesionBenchError):
    """Metric matrix has missing (NaN) entries."""


class FewerThanTwoTeams(LesionBenchError):
    """Ranking needs at least two teams."""


# --- statistics -------------------------------------------------------------

class EmptyInput(LesionBenchError):
    """A statistical routine received an empty sample."""


class ConstantInput(LesionBenchError):
    """Correlation undefined for a constant sequence."""


class OutOfRangeP(LesionBenchError):
    """A p-value outside [0, 1] was supplied."""


class LengthMismatch(LesionBenchError):
    """Paired sequences have different lengths."""


# --- phenotyping ------------------------------------------------------------

class UnknownAtlasLabel(LesionBenchError):
    """Atlas contains a positive label absent from the legend."""


class NoLesionLoad(LesionBenchError):
    """Territory assignment undefined: no lesion voxels in any territory."""


# --- manifests / CLI --------------------------------------------------------

class ManifestError(LesionBenchError):
    """Schema violation in a cohort manifest (carries row/column context)."""


# --- rating study -----------------------------------------------------------

class InsufficientPool(LesionBenchError):
    """Case pool too small to build the requested sessions."""


class OutOfRangeScore(LesionBenchError):
    """Rating score outside the 1..6 scale."""


class UnknownItem(LesionBenchError):
    """Score submitted for an item not in the session."""


class UnknownSession(LesionBenchError):
    """No session with the given id."""


class ClosedSession(LesionBenchError):
    """Score submitted to a closed session."""


class NoCompletedSessions(LesionBenchError):
    """Rating report requested but no session has any completed item."""
