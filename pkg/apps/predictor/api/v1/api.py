"""
API v1 router aggregation.
"""
from fastapi import APIRouter

from apps.predictor.api.v1.endpoints import predictions

api_router = APIRouter()

api_router.include_router(predictions.router, prefix="/predictions", tags=["predictions"])
