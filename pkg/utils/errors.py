"""Exception types raised across the tiling compiler"""


class TilingError(Exception):
    """Base class for every error raised by this package"""


class AlphabetMismatchError(TilingError):
    """A patch and a rule disagree on their alphabet"""


class IndexOutOfRangeError(TilingError):
    """A letter, color or tile index does not fit its table"""


class NonConstantColumnError(TilingError):
    """A patch column maps to more than one projected letter"""

    def __init__(self, column: int):
        super().__init__(f"Column {column} is not constant under the projection")
        self.column = column


class InconsistentBoundaryError(TilingError):
    """Boundary constraints contradict each other"""


class SpecFormatError(TilingError):
    """A JSON specification could not be interpreted"""


class ScheduleError(TilingError):
    """A zoom schedule is unusable for the requested levels"""


class AssemblyError(TilingError):
    """An assembly cannot be built or is structurally broken"""


class MalformedMachineError(TilingError):
    """A Turing machine description is incomplete or contradictory"""


class ResourceLimitError(TilingError):
    """A configured size or search budget was exceeded"""


class FlattenBoundError(ResourceLimitError):
    """The flat tile set would exceed its state bound"""


class RenderFormatError(TilingError):
    """Unknown render format or unrenderable input"""


class ConfigError(TilingError):
    """An environment setting is malformed"""


class ArtifactError(TilingError):
    """A JSON artifact could not be read or written"""
