"""Exception hierarchy shared across the toolkit.

Three broad families map onto the CLI's exit codes: configuration problems
(exit 1), data problems (exit 2), and backend problems (exit 3). Library code
raises the specific subclasses; the CLI only needs the three bases.
"""

from __future__ import annotations


class ConfigError(Exception):
    """Bad configuration: missing files, invalid templates, bad arguments."""


class DataError(Exception):
    """Malformed or contract-violating data in a pipeline stage."""


class BackendError(Exception):
    """A chat-completion backend failed."""


class ValidationError(DataError):
    """A record failed its construction-time invariants."""


class TemplateError(ConfigError):
    """A chat template is unusable."""


class FractionOutOfRangeError(ConfigError):
    """A sampling fraction falls outside [0, 1]."""


class EmptyPoolError(ConfigError):
    """The caption-question pool has no entries."""


class EmptyAnnotationsError(DataError):
    """An aggregate was requested over zero annotations."""


class DuplicateIdError(DataError):
    def __init__(self, source: str, record_id: str):
        super().__init__(f"duplicate id {record_id!r} in {source}")
        self.source = source
        self.record_id = record_id


class TripletParseError(DataError):
    """A synthesizer completion could not be parsed into a task triplet."""


class MissingMarkerError(TripletParseError):
    def __init__(self, which: str):
        super().__init__(f"completion lacks the {which} response marker")
        self.which = which


class EmptyFieldError(TripletParseError):
    def __init__(self, which: str):
        super().__init__(f"parsed {which} is empty")
        self.which = which


class MalformedTurnError(TripletParseError):
    """Turn boundaries are missing or out of order in a completion."""


class LabelParseError(DataError):
    """A judge reply did not yield a usable consistency label."""


class NoLabelFoundError(LabelParseError):
    pass


class AmbiguousLabelError(LabelParseError):
    pass


class MissingPlaceholderError(DataError):
    def __init__(self, name: str):
        super().__init__(f"no value available for placeholder {{{name}}}")
        self.name = name


class BackendTimeoutError(BackendError):
    """The backend did not answer within the configured timeout."""


class ConnectionFailedError(BackendError):
    """The backend endpoint could not be reached."""


class HttpStatusError(BackendError):
    def __init__(self, status_code: int, detail: str = ""):
        msg = f"backend returned HTTP {status_code}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.status_code = status_code


class MalformedResponseError(BackendError):
    """The backend answered with a body the client cannot interpret."""


class RetriesExhaustedError(BackendError):
    def __init__(self, attempts: int, cause: Exception):
        super().__init__(f"gave up after {attempts} attempts: {cause}")
        self.attempts = attempts
        self.cause = cause


class NoRuleMatchedError(BackendError):
    """A scripted backend received a request none of its rules cover."""
