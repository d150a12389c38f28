import math
import re
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.exceptions import (DataValidationError, DimensionMismatchError, DuplicateNameError,
                             MissingAnnotationError)


class Triple(BaseModel):
    model_config = ConfigDict(frozen=True)

    head: str
    relation: str
    tail: str

    @field_validator("head", "relation", "tail")
    @classmethod
    def _nonempty(cls, value: str) -> str:
        value = value.strip()
        if not value:
            raise ValueError("triple fields must be nonempty")
        return value

    def key(self) -> Tuple[str, str, str]:
        return self.head, self.relation, self.tail


class TripleBatch(BaseModel):
    triples: List[Triple] = []
    duplicate_count: int = 0
    skipped: List[str] = []


class GraphStats(BaseModel):
    nodes: int
    edges: int
    relations: int


class Walk(BaseModel):
    model_config = ConfigDict(frozen=True)

    sequence: List[str]
    short: bool = False

    @field_validator("sequence")
    @classmethod
    def _alternates(cls, value: List[str]) -> List[str]:
        if not value or len(value) % 2 == 0:
            raise ValueError("a walk alternates entity, relation, ..., entity and has odd length")
        return value

    @property
    def hops(self) -> int:
        return (len(self.sequence) - 1) // 2

    @property
    def entities(self) -> List[str]:
        return self.sequence[0::2]

    @property
    def relations(self) -> List[str]:
        return self.sequence[1::2]

    def edges(self) -> List[Tuple[str, str, str]]:
        s = self.sequence
        return [(s[i], s[i + 1], s[i + 2]) for i in range(0, len(s) - 2, 2)]

    def incomplete(self) -> List[str]:
        return [self.sequence[0]] + self.relations


class HoppingExample(BaseModel):
    input: List[str]
    target: List[str]


class HoppingBatch(BaseModel):
    examples: List[HoppingExample] = []
    excluded: int = 0
    short_skipped: int = 0


class ParsingExample(BaseModel):
    question: str
    target: List[str]


class QuestionRecord(BaseModel):
    id: str
    question: str = ""
    source: Optional[str] = None
    relations: List[str] = []
    answer: Optional[str] = None
    evidence: Optional[List[str]] = None

    @field_validator("id", mode="before")
    @classmethod
    def _id_text(cls, value):
        return str(value)


_BRACKETED = re.compile(r"\[([^\]]+)\]")


class MetaQARecord(BaseModel):
    id: str
    question: str = ""
    path: str
    answer: str
    source: Optional[str] = None

    @field_validator("id", mode="before")
    @classmethod
    def _id_text(cls, value):
        return str(value)

    @model_validator(mode="after")
    def _source_from_question(self):
        if self.source is None:
            match = _BRACKETED.search(self.question)
            if match is None:
                raise MissingAnnotationError(f"Question {self.id} names no source entity.")
            self.source = match.group(1).strip()
        return self


class PredictionRecord(BaseModel):
    id: str
    prediction: str
    gold: str

    @field_validator("id", mode="before")
    @classmethod
    def _id_text(cls, value):
        return str(value)


class PathPairs(BaseModel):
    """Source entity and the relations of its path, one per hop."""
    source: str
    relations: List[str] = Field(min_length=1)


class DistanceMatrix(BaseModel):
    """Symmetric pairwise distances. ``inf`` marks pairs in different components."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: np.ndarray
    labels: Optional[List[str]] = None

    @field_validator("d", mode="before")
    @classmethod
    def _matrix(cls, value):
        d = np.array(value, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionMismatchError(f"Distance matrix must be square, got shape {d.shape}.")
        if np.any(np.isnan(d)) or np.any(d < 0):
            raise DataValidationError("Distances must be non-negative numbers.")
        if np.any(np.diag(d) != 0):
            raise DataValidationError("Distance matrix diagonal must be zero.")
        finite = np.isfinite(d)
        if not np.array_equal(finite, finite.T):
            raise DataValidationError("Distance matrix is not symmetric.")
        if finite.any():
            scale = max(1.0, float(np.max(d[finite])))
            if not np.allclose(np.where(finite, d, 0), np.where(finite, d, 0).T, rtol=0, atol=1e-9 * scale):
                raise DataValidationError("Distance matrix is not symmetric.")
        return d

    @model_validator(mode="after")
    def _labels(self):
        if self.labels is not None and len(self.labels) != self.d.shape[0]:
            raise DimensionMismatchError("One label per row is required.")
        return self

    @property
    def size(self) -> int:
        return self.d.shape[0]

    @property
    def connected(self) -> bool:
        return bool(np.all(np.isfinite(self.d)))

    def scaled(self, s: float) -> "DistanceMatrix":
        return DistanceMatrix(d=self.d * s, labels=self.labels)


class DeltaEstimate(BaseModel):
    delta_rel_values: List[float]
    delta_per_repeat: List[float]
    diameter_per_repeat: List[float]
    mean: float
    std: float
    curvature: Optional[float] = None
    curvature_error: Optional[str] = None
    seed: int
    sample_size: int
    repeats: int
    metric: str

    @property
    def delta(self) -> float:
        return float(np.mean(self.delta_per_repeat))

    @property
    def diam(self) -> float:
        return float(np.mean(self.diameter_per_repeat))

    @property
    def delta_rel(self) -> float:
        return self.mean


class EmbeddingTable(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    names: List[str]
    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def _matrix(cls, value):
        arr = np.array(value, dtype=float)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"Embedding vectors must form a matrix, got shape {arr.shape}.")
        if not np.all(np.isfinite(arr)):
            raise DataValidationError("Embedding values must be finite.")
        return arr

    @model_validator(mode="after")
    def _rows(self):
        if len(self.names) != self.vectors.shape[0]:
            raise DimensionMismatchError(f"{len(self.names)} names for {self.vectors.shape[0]} rows.")
        seen = set()
        for name in self.names:
            if name in seen:
                raise DuplicateNameError(f"Duplicate embedding name {name!r}.")
            seen.add(name)
        return self

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}


class RunConfig(BaseModel):
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int
    sample_size: int = Field(ge=1)
    repeats: int = Field(ge=1)
    curvature: Optional[float] = None
    hops: int = Field(ge=1)
    heldout: Optional[str] = None
    strict: bool = False
    gradcheck: bool = False
    paper_literal_denominator: bool = False
    metric: str = "graph"
    format: str = "tsv"
    options: Dict[str, object] = {}

    @field_validator("curvature")
    @classmethod
    def _curvature(cls, value):
        if value is not None and (not math.isfinite(value) or value < 0):
            raise ValueError("curvature must be finite and non-negative")
        return value
