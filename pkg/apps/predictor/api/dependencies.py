"""
API dependencies for the predictor.
"""
from apps.svr.schemas.svr import SvrModel
from apps.svr.services.svr_service import SvrService
from core.config import settings


def get_model() -> SvrModel:
    """Load the SVR model configured for the service; a missing file is a 404."""
    return SvrService.load_model(settings.MODEL_PATH)
