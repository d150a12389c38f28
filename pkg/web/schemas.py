from typing import List, Optional

from pydantic import BaseModel, Field

from core.config import settings
from core.models import Triple


class TriplesRequest(BaseModel):
    triples: List[Triple] = []
    add_inverse_relations: bool = False


class DeltaRequest(TriplesRequest):
    sample_size: int = Field(default=settings.sample_size, ge=4)
    repeats: int = Field(default=settings.repeats, ge=1)
    seed: int = settings.seed


class WalksRequest(TriplesRequest):
    start: Optional[List[str]] = None
    hops: int = Field(default=settings.hops, ge=1)
    walks_per_start: int = Field(default=1, ge=1)
    seed: int = settings.seed
    heldout: List[List[str]] = []
    exclusion: str = "exact"


class DegreeRow(BaseModel):
    out_degree: int
    proportion: float


class DegreeResponse(BaseModel):
    rows: List[DegreeRow]
    branching_share: float


class LayerRequest(BaseModel):
    vectors: List[List[float]]
    Z: List[List[float]]
    r: List[float]
    c: float
    paper_literal_denominator: bool = False
