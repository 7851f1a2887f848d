import logging
import sys
from logging.handlers import RotatingFileHandler

from app.core.config import settings

# Configure logging
def setup_logging():
    # stdout carries command output, so console logs go to stderr
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(
            RotatingFileHandler(
                settings.LOG_FILE,
                maxBytes=settings.LOG_MAX_BYTES,
                backupCount=settings.LOG_BACKUP_COUNT,
            )
        )
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )

    logger = logging.getLogger("semprivacy")
    logger.setLevel(settings.LOG_LEVEL)

    return logger

# Create logger instance
logger = setup_logging()
