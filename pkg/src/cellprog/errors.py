"""Exception hierarchy shared by every stage of the compiler."""


class CellprogError(Exception):
    """Base class for all errors raised by this package."""


class TransformError(CellprogError, ValueError):
    pass


class SceneError(CellprogError, ValueError):
    """Scene text could not be turned into a document.

    ``location`` is either ``"line L col C"`` for syntax problems or a
    dotted field path such as ``tools[2].transform``.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ExtractionError(CellprogError, ValueError):
    def __init__(self, message: str, entity: str | None = None):
        self.entity = entity
        super().__init__(f"{entity}: {message}" if entity else message)


class InterpolationError(CellprogError, ValueError):
    pass


class CodegenError(CellprogError, ValueError):
    pass


class PlanWarning(UserWarning):
    """Non-fatal planning issue (e.g. an unknown operation suffix)."""
