from typing import List

from fastapi import APIRouter, Depends, Query

from core.models import PredictionRecord
from service.analysis_service import AnalysisServiceInterface
from service.delta_service import DeltaServiceInterface
from web.dependencies import get_analysis_service, get_delta_service

router = APIRouter()


@router.post("/em", summary="Exact-match score in percent.")
def exact_match(records: List[PredictionRecord], service: AnalysisServiceInterface = Depends(get_analysis_service)):
    return service.exact_match(records)


@router.get("/curvature", summary="Initial curvature for a relative delta.")
def curvature(delta_rel: float = Query(...), service: DeltaServiceInterface = Depends(get_delta_service)):
    return {"delta_rel": delta_rel, "curvature": service.curvature(delta_rel)}
