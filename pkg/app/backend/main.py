"""
FastAPI service for word percolation estimates
Main application entry point
"""
import logging
import time
import uuid
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware

from .logs import configure_logging, get_logger, log_event
from .routers import bounds, estimates, exports, oracle
from .settings import service_port

logger = get_logger("http")


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging()
    yield


app = FastAPI(
    title="Word Percolation Lab API",
    description="Monte Carlo estimates, word oracles and closed-form bounds for percolation of words",
    version="0.1.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)


@app.middleware("http")
async def request_logging(request: Request, call_next):
    """One structured line per request; the request id is echoed in X-Request-ID"""
    request_id = request.headers.get("X-Request-ID") or uuid.uuid4().hex
    started = time.perf_counter()
    response = await call_next(request)
    duration_ms = round((time.perf_counter() - started) * 1000, 2)
    response.headers["X-Request-ID"] = request_id
    log_event(logger, logging.INFO, "http.request", f"{request.method} {request.url.path}",
              request_id=request_id, method=request.method, path=request.url.path,
              status=response.status_code, duration_ms=duration_ms)
    return response


@app.get("/health")
async def health_check():
    return {"status": "ok", "version": "0.1.0"}


app.include_router(estimates.router, prefix="/v1/estimates", tags=["estimates"])
app.include_router(oracle.router, prefix="/v1/oracle", tags=["oracle"])
app.include_router(bounds.router, prefix="/v1/bounds", tags=["bounds"])
app.include_router(exports.router, prefix="/v1/exports", tags=["exports"])

if __name__ == "__main__":
    import uvicorn
    uvicorn.run("app.backend.main:app", host="0.0.0.0", port=service_port())
