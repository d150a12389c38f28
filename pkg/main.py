import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from core.exceptions import HyperHopException, status_code_for
from service import UNEXPECTED_ERROR
from web.middleware import LoggingMiddleware, RunIdMiddleware
from web.routers import analysis, graph, layer

logger = logging.getLogger(__name__)

app = FastAPI(title="hyperhop")

app.include_router(graph.router, prefix="/graph", tags=["Knowledge graph"])
app.include_router(analysis.router, prefix="/analysis", tags=["Analysis"])
app.include_router(layer.router, prefix="/layer", tags=["Poincaré layer"])

# Innermost first
app.add_middleware(LoggingMiddleware)  # type: ignore
app.add_middleware(RunIdMiddleware)  # type: ignore


@app.exception_handler(HyperHopException)
async def handle_hyperhop_exception(_request: Request, exc: HyperHopException):
    return JSONResponse(status_code=status_code_for(exc), content={"detail": exc.message, "error": type(exc).__name__})


@app.exception_handler(Exception)
async def handle_generic_exception(_request: Request, exc: Exception):
    logger.exception("Unhandled error", exc_info=exc)
    return JSONResponse(status_code=500, content={"detail": UNEXPECTED_ERROR})
