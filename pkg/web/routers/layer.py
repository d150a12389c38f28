import numpy as np
from fastapi import APIRouter, Depends

from core.exceptions import DimensionMismatchError
from core.hlayer import PoincareLinearParams
from core.models import EmbeddingTable
from service.layer_service import LayerServiceInterface
from web.dependencies import get_layer_service
from web.schemas import LayerRequest

router = APIRouter()


@router.post("/forward", summary="Run vectors through the Poincaré linear layer pipeline.")
def forward(request: LayerRequest, service: LayerServiceInterface = Depends(get_layer_service)):
    params = PoincareLinearParams(Z=request.Z, r=request.r, c=request.c)
    if any(len(v) != params.n for v in request.vectors):
        raise DimensionMismatchError(f"Every vector must have {params.n} entries.")
    vectors = np.asarray(request.vectors, dtype=float).reshape(len(request.vectors), params.n)
    table = EmbeddingTable(names=[str(i) for i in range(len(vectors))], vectors=vectors)
    report = service.transform(table, params, request.paper_literal_denominator)
    return {"outputs": report["outputs"], "metadata": report["metadata"]}
