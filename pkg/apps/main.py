"""
FastAPI application serving final-accuracy predictions.
"""
import sys
from pathlib import Path

# Ensure project root is on sys.path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from core.config import settings
from core.exceptions import ForecastError
from core.logger import logger

from apps.predictor.api.v1.api import api_router as predictor_api_router


app = FastAPI(
    title=settings.PROJECT_NAME,
    version=settings.PROJECT_VERSION,
    description="Predicts the converged accuracy of a training run from its first epochs.",
)

app.include_router(predictor_api_router, prefix=settings.API_V1_PREFIX)


@app.exception_handler(ForecastError)
async def forecast_error_handler(request: Request, exc: ForecastError):
    logger.warning(f"{request.method} {request.url.path} -> {exc.status_code}: {exc.detail}")
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.on_event("startup")
async def startup_event():
    logger.info(f"Prediction service starting up (model: {settings.MODEL_PATH})")


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("Prediction service shutting down...")


@app.get("/health")
async def health_check():
    return {"status": "healthy", "service": "accuracy-forecast"}


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "apps.main:app",
        host="0.0.0.0",
        port=8000,
        reload=True,
    )
