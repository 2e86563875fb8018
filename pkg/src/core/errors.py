"""LDOF Error Handling
Exception hierarchy with stable exit codes, plus failure
classification for sweep cells that must not abort a run.
"""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

logger = logging.getLogger("ldof.errors")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class LdofError(Exception):
    """Base for every error raised by the toolkit."""

    exit_code = EXIT_INTERNAL


class ParameterError(LdofError, ValueError):
    """A parameter is outside its valid range (k, n, c, k-range...)."""

    exit_code = EXIT_USAGE


class ConfigError(ParameterError):
    pass


class DataError(LdofError, ValueError):
    """Input data violates a precondition."""

    exit_code = EXIT_DATA


class MalformedInputError(DataError):
    pass


class DataFormatError(DataError):
    """A file could not be parsed; carries the offending line when known."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class SceneError(DataError):
    pass


class InternalError(LdofError, RuntimeError):
    exit_code = EXIT_INTERNAL


class FailureType(Enum):
    PARAMETER = "parameter"
    DATA = "data"
    NUMERIC = "numeric"
    RESOURCE = "resource"
    UNKNOWN = "unknown"


@dataclass
class IncidentRecord:
    component: str
    failure_type: FailureType
    message: str
    timestamp: float = field(default_factory=time.time)


def classify_failure(error: BaseException) -> FailureType:
    if isinstance(error, ParameterError):
        return FailureType.PARAMETER
    if isinstance(error, DataError):
        return FailureType.DATA
    if isinstance(error, (FloatingPointError, ZeroDivisionError, OverflowError)):
        return FailureType.NUMERIC
    if isinstance(error, MemoryError):
        return FailureType.RESOURCE
    err_str = str(error).lower()
    if "memory" in err_str:
        return FailureType.RESOURCE
    return FailureType.UNKNOWN


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, LdofError):
        return error.exit_code
    return EXIT_INTERNAL


def record_incident(component: str, error: BaseException) -> IncidentRecord:
    incident = IncidentRecord(
        component=component,
        failure_type=classify_failure(error),
        message=str(error),
    )
    logger.warning(f"{component} failed [{incident.failure_type.value}]: {incident.message}")
    return incident
