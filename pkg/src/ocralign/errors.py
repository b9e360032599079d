"""Exception hierarchy shared by all pipeline stages."""


class OcrAlignError(Exception):
    """Base class. ``exit_code`` is what the CLI returns for it."""

    exit_code = 2


class InputParseError(OcrAlignError):
    exit_code = 2


class MalformedHocr(InputParseError):
    def __init__(self, message, source="<bytes>", offset=None):
        self.source = source
        self.offset = offset
        where = source if offset is None else f"{source} at byte {offset}"
        super().__init__(f"{where}: {message}")


class PageDimensionMissing(MalformedHocr):
    pass


class MalformedXml(InputParseError):
    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message if location is None else f"{location}: {message}")


class EmptyDocument(InputParseError):
    pass


class UnbalancedBraces(ValueError):
    """Raised internally by the tex-math flattener; never escapes it."""


class CapacityExceeded(OcrAlignError):
    exit_code = 3


class ConfigError(OcrAlignError):
    exit_code = 3


class InconsistentMap(OcrAlignError):
    exit_code = 3


class PageCountMismatch(OcrAlignError):
    exit_code = 2


class ProjectionMismatch(OcrAlignError):
    exit_code = 2


class EmptyInput(OcrAlignError):
    exit_code = 1


class UnknownTokenId(OcrAlignError):
    exit_code = 2


class MissingPageImage(OcrAlignError):
    exit_code = 2


class StageError(OcrAlignError):
    """A failure inside a named pipeline stage, carrying the cause's exit code."""

    def __init__(self, stage, message, exit_code=2, error_type="OcrAlignError"):
        super().__init__(stage, message, exit_code, error_type)
        self.stage = stage
        self.message = message
        self.exit_code = exit_code
        self.error_type = error_type

    def __str__(self):
        return f"{self.stage}: {self.message}"
