"""
Prediction endpoints.
"""
from fastapi import APIRouter, Depends

from apps.power_fit.services.power_fit_service import PowerFitService
from apps.predictor.api.dependencies import get_model
from apps.predictor.schemas.prediction import PowerFitResponse, PredictionOutcome, PredictionRequest
from apps.predictor.services.predictor_service import PredictorService
from apps.svr.schemas.svr import SvrModel

router = APIRouter()


@router.post("", response_model=PredictionOutcome)
async def predict_final_accuracy(
    request: PredictionRequest,
    model: SvrModel = Depends(get_model),
):
    """Predict the converged accuracy of a run from its first epochs."""
    return PredictorService.predict_final_accuracy(model, request.points(), request.fin_epoch)


@router.post("/power-fit", response_model=PowerFitResponse)
async def power_fit(request: PredictionRequest):
    """Extrapolate with the constrained power law only."""
    fit = PowerFitService.fit_power_law(
        request.points(), max(request.accuracies), request.fin_epoch
    )
    return PowerFitResponse(fit=fit, value=PowerFitService.predict_final(fit))
