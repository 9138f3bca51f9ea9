from dataclasses import dataclass
from logging.handlers import RotatingFileHandler
from typing import Optional
import logging
import os

from dotenv import load_dotenv

# Quadrature
GAUSS_LEGENDRE_ORDER = 64
TRAPEZOID_POINTS = 512
DENSITY_CHECK_POINTS = 4096
DENSITY_CHECK_POINTS_2D = 512
ENVELOPE_INFLATION = 1.01

# Nets and packings
NET_ENUMERATION_CAP = 100_000
EXHAUSTIVE_CODEBOOK_BITS = 16
CODEBOOK_MAX_WORDS = 512
CODEBOOK_MAX_REJECTIONS = 256
CODEBOOK_BATCH = 64
PACKING_MAX_LEVEL = 10_000

# Solvers
BISECTION_MAX_ITER = 400
KKT_TOLERANCE = 1e-12
RATE_RESIDUAL_TOLERANCE = 1e-10

# Oracle-inequality constants used by the harness
DEFAULT_XI = 0.48
DEFAULT_C_TAU = 9.0

# Harness defaults
DEFAULT_BASE_SEED = 20100101
DEFAULT_SLOPE_TOLERANCE = 0.12
COVERING_TRIALS_FAST = 1_000
COVERING_TRIALS_FULL = 10_000

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
LOG_MAX_BYTES = 10000
LOG_BACKUP_COUNT = 3


@dataclass(frozen=True)
class ServiceSettings:
    host: str = "0.0.0.0"
    port: int = 8000
    log_file: str = "inverse_erm.log"
    activity_log_file: str = "activity.log"
    log_level: str = "INFO"


def load_service_settings() -> ServiceSettings:
    """
    Settings for the HTTP service. Only the service reads the environment;
    the command line and the library never do.
    """
    load_dotenv()
    return ServiceSettings(
        host=os.getenv("INVERSE_ERM_HOST", "0.0.0.0"),
        port=int(os.getenv("INVERSE_ERM_PORT", "8000")),
        log_file=os.getenv("INVERSE_ERM_LOG_FILE", "inverse_erm.log"),
        activity_log_file=os.getenv("INVERSE_ERM_ACTIVITY_LOG_FILE", "activity.log"),
        log_level=os.getenv("INVERSE_ERM_LOG_LEVEL", "INFO"),
    )


def configure_logging(level: str = "INFO", log_file: Optional[str] = None,
                      activity_log_file: Optional[str] = None) -> logging.Logger:
    """Attach rotating file handlers to the package and activity loggers."""
    app_logger = logging.getLogger("inverse_erm")
    app_logger.setLevel(level.upper())

    if log_file and not any(isinstance(h, RotatingFileHandler) for h in app_logger.handlers):
        app_handler = RotatingFileHandler(log_file, maxBytes=LOG_MAX_BYTES, backupCount=LOG_BACKUP_COUNT)
        app_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        app_logger.addHandler(app_handler)

    if activity_log_file:
        activity_logger = logging.getLogger("inverse_erm.activity")
        if not activity_logger.handlers:
            activity_handler = RotatingFileHandler(activity_log_file, maxBytes=LOG_MAX_BYTES,
                                                   backupCount=LOG_BACKUP_COUNT)
            activity_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            activity_logger.addHandler(activity_handler)

    return app_logger
