"""
Error translation shared by the routers
"""
from contextlib import contextmanager

from fastapi import HTTPException

from ..errors import ConfigError, DomainError, ResourceRefusal


@contextmanager
def service_errors():
    """DomainError / ConfigError -> 422, ResourceRefusal -> 413"""
    try:
        yield
    except ResourceRefusal as e:
        raise HTTPException(status_code=413, detail={"error": str(e), "limit": e.limit})
    except (DomainError, ConfigError) as e:
        raise HTTPException(status_code=422, detail={"error": str(e)})
