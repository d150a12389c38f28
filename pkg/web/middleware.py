import logging
from datetime import datetime

from fastapi import Request, Response
from starlette.middleware.base import BaseHTTPMiddleware

import core
from service import set_run_id

logger = logging.getLogger(__name__)


class RunIdMiddleware(BaseHTTPMiddleware):
    def __init__(self, app):
        super().__init__(app)
        self.app = app

    async def dispatch(self, request: Request, call_next):
        set_run_id(core.make_run_id())
        response: Response = await call_next(request)
        set_run_id("")
        return response


class LoggingMiddleware(BaseHTTPMiddleware):
    def __init__(self, app):
        super().__init__(app)
        self.app = app

    async def dispatch(self, request: Request, call_next):
        logger.info("REQUEST START: %s %s", request.method, request.url)
        started = datetime.now()
        response: Response = await call_next(request)
        duration = (datetime.now() - started).total_seconds() * 1000
        logger.info("REQUEST END: %s %s response=\"%d\" duration=\"%.1fms\"",
                    request.method, request.url, response.status_code, duration)
        return response
