import logging
import sys
import threading
from contextlib import contextmanager

from core.config import settings
from core.exceptions import HyperHopException

logging_format = ("%(asctime)s,%(msecs)d %(levelname)s tc=\"%(run_id)s\" [%(thread)d] [%(filename)s:%(lineno)d] %("
                  "message)s")

logging.basicConfig(level=settings.log_level.upper(), format=logging_format, stream=sys.stderr)

logger = logging.getLogger(__name__)

UNEXPECTED_ERROR = "An unexpected error occurred while processing your request."


def set_run_id(run_id: str):
    """Set the run id stamped on every log record of this thread."""
    threading.current_thread().run_id = run_id


def get_run_id():
    return getattr(threading.current_thread(), "run_id", "UNKNOWN")


class RunIdFilter(logging.Filter):
    def filter(self, record):
        record.run_id = get_run_id()
        return True


for _handler in logging.getLogger().handlers:
    _handler.addFilter(RunIdFilter())


def set_log_level(level: str) -> None:
    logging.getLogger().setLevel(level.upper())


@contextmanager
def service_call(operation: str):
    """Re-raise project exceptions unchanged; wrap anything else."""
    try:
        yield
    except HyperHopException as known_exc:
        logger.warning("%s failed: %s", operation, known_exc.message)
        raise
    except Exception as e:
        logger.exception("%s failed unexpectedly", operation)
        raise HyperHopException(UNEXPECTED_ERROR) from e
