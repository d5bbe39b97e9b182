"""Exception types shared across the service."""


class LivetuneError(Exception):
    """Base class for all service errors."""

    code = "error"


# -- session layer ----------------------------------------------------------

class EmptyDirective(LivetuneError):
    code = "EmptyDirective"


class UnknownSession(LivetuneError):
    code = "UnknownSession"


class UnknownMessage(LivetuneError):
    code = "UnknownMessage"


# -- data generation --------------------------------------------------------

class TeacherUnavailable(LivetuneError):
    code = "TeacherUnavailable"


class SearchUnavailable(LivetuneError):
    code = "SearchUnavailable"


class NoValidExamples(LivetuneError):
    code = "NoValidExamples"


class EmptyResults(LivetuneError):
    code = "EmptyResults"


class UnsupportedFormat(LivetuneError):
    code = "UnsupportedFormat"


class ExtractionFailed(LivetuneError):
    code = "ExtractionFailed"


# -- training ---------------------------------------------------------------

class EmptyDataset(LivetuneError):
    code = "EmptyDataset"


class MissingModerationReceipt(LivetuneError):
    code = "MissingModerationReceipt"


class UnknownBaseVersion(LivetuneError):
    code = "UnknownBaseVersion"


class UnknownJob(LivetuneError):
    code = "UnknownJob"


class BackendFailure(LivetuneError):
    code = "BackendFailure"


class InvalidTransition(LivetuneError):
    code = "InvalidTransition"


# -- registry ---------------------------------------------------------------

class UnknownVersion(LivetuneError):
    code = "UnknownVersion"


class UnknownArtifact(LivetuneError):
    code = "UnknownArtifact"


class UnknownScope(LivetuneError):
    code = "UnknownScope"


class IncompatibleBase(LivetuneError):
    code = "IncompatibleBase"


class NothingToRollback(LivetuneError):
    code = "NothingToRollback"


# -- evaluation -------------------------------------------------------------

class MalformedCompletion(LivetuneError):
    code = "MalformedCompletion"


class EmptyReports(LivetuneError):
    code = "EmptyReports"

