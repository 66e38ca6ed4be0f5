"""Exception types raised across the toolkit."""


class VoletaError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(VoletaError, ValueError):
    """An argument violates an operation's preconditions."""


class MeshParseError(VoletaError, ValueError):
    """A mesh file could not be parsed.

    ``location`` names the offending line (text formats) or byte offset
    (binary PLY) when known.
    """

    def __init__(self, message, path=None, location=None):
        self.path = path
        self.location = location
        where = ""
        if path is not None:
            where = f"{path}"
            if location is not None:
                where += f":{location}"
            where += ": "
        super().__init__(where + message)


class IntegrityError(VoletaError, ValueError):
    """Paired scene files disagree (e.g. frame and mask dimensions)."""


class ImageFormatError(VoletaError, ValueError):
    """An image has the wrong bit depth or mode for its role."""


class EmptySceneError(VoletaError, ValueError):
    """A scene directory holds no RGB frames."""


class IllConditionedError(VoletaError, ValueError):
    """A registration problem is degenerate (collinear or coincident points)."""
