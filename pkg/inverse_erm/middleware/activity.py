from starlette.middleware.base import BaseHTTPMiddleware
from fastapi import FastAPI, Request
import logging
import time

activity_logger = logging.getLogger("inverse_erm.activity")


class ActivityMiddleware(BaseHTTPMiddleware):
    def __init__(self, app: FastAPI):
        super().__init__(app)

    async def dispatch(self, request: Request, call_next):
        started = time.perf_counter()
        client = request.client.host if request.client else "unknown"
        activity_logger.info(f"{client} {request.method} {request.url.path}")
        response = await call_next(request)
        elapsed = time.perf_counter() - started
        if response.status_code >= 400:
            activity_logger.warning(f"{request.method} {request.url.path} -> {response.status_code} ({elapsed:.3f}s)")
        else:
            activity_logger.info(f"{request.method} {request.url.path} -> {response.status_code} ({elapsed:.3f}s)")
        return response
