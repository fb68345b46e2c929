"""
Exception hierarchy shared by services, routers and the CLI
"""
from typing import Optional


class WordPercError(Exception):
    """Base class; `exit_code` is what the CLI returns for it"""
    exit_code = 1


class DomainError(WordPercError, ValueError):
    """A precondition of an operation does not hold"""
    exit_code = 2


class EncodingError(DomainError):
    """An object id does not follow the canonical encoding"""


class ResourceRefusal(WordPercError):
    """A guard refused the work; `limit` names the limiting product"""
    exit_code = 3

    def __init__(self, message: str, limit: Optional[str] = None):
        super().__init__(message)
        self.limit = limit


class ConfigError(WordPercError, ValueError):
    """Invalid run configuration"""
    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if key is not None:
            where = f"{key}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)
        self.key = key
        self.line = line


IO_EXIT_CODE = 4
