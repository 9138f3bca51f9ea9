from fastapi import Request, FastAPI
from fastapi.responses import JSONResponse
import logging

from inverse_erm.ext.error import (
    BaseCustomError, DomainViolationError, ParityError, PreconditionError, OverflowGuardError,
    UnsupportedOperatorError, NonPositiveDensityError, EnvelopeError, InfeasiblePackingError,
    NetCardinalityError, BoxMismatchError, ComponentDeclarationError, BisectionError,
    DivergentIntegralError, AdmissibilityError, ConfigError, HarnessError, OutputExistsError
)

logger = logging.getLogger(__name__)


# Base custom error handler
async def custom_error_handler(request: Request, exc: Exception):
    if isinstance(exc, BaseCustomError):
        logger.warning(f"{type(exc).__name__} on {request.url.path}: {exc.message}")
        content = {"success": False, "message": exc.message}
        if isinstance(exc, ConfigError) and exc.key:
            content["key"] = exc.key
        if isinstance(exc, InfeasiblePackingError):
            content["feasible_range"] = list(exc.feasible_range)
        if isinstance(exc, NetCardinalityError):
            content["count"] = exc.count
        if isinstance(exc, AdmissibilityError):
            content["interval"] = list(exc.interval)
        return JSONResponse(status_code=exc.status_code, content=content)
    # General exception handler
    logger.error(f"Unhandled exception on {request.url.path}: {str(exc)}")
    return JSONResponse(
        status_code=500,
        content={"success": False, "message": "An unexpected error occurred."}
    )


def add_error_handlers(app: FastAPI):
    # Add handlers for all custom exceptions
    custom_exceptions = [
        DomainViolationError, ParityError, PreconditionError, OverflowGuardError,
        UnsupportedOperatorError, NonPositiveDensityError, EnvelopeError, InfeasiblePackingError,
        NetCardinalityError, BoxMismatchError, ComponentDeclarationError, BisectionError,
        DivergentIntegralError, AdmissibilityError, ConfigError, HarnessError, OutputExistsError
    ]

    for exception in custom_exceptions:
        app.add_exception_handler(exception, custom_error_handler)

    # Add general exception handler
    app.add_exception_handler(Exception, custom_error_handler)
