import json
import logging
import re
import string
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from core.exceptions import (DataValidationError, DimensionMismatchError, DuplicateNameError,
                             EmptyInputError, MalformedInputError, MissingNameError)
from core.geometry import Curvature, check_in_ball, distance, exp0
from core.hyperbolicity import curvature_from_delta
from core.models import DeltaEstimate, EmbeddingTable, PathPairs, PredictionRecord

logger = logging.getLogger(__name__)

EMBEDDING_FORMATS = ("text", "jsonl")

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCTUATION = set(string.punctuation)


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation, drop articles, collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCTUATION)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def exact_match(prediction: str, gold: str) -> bool:
    return normalize_answer(prediction) == normalize_answer(gold)


def em_score(records: Sequence[PredictionRecord]) -> float:
    if not records:
        raise EmptyInputError("Exact match needs at least one prediction.")
    seen = set()
    for record in records:
        if record.id in seen:
            raise DuplicateNameError(f"Prediction id {record.id!r} appears more than once.")
        seen.add(record.id)
    hits = sum(exact_match(r.prediction, r.gold) for r in records)
    return 100.0 * hits / len(records)


def _located(exc_type, message: str, source: Optional[str], number: int):
    return exc_type(f"{source or '<input>'}:{number}: {message}")


def _floats(tokens: Sequence[str], source: Optional[str], number: int) -> List[float]:
    try:
        values = [float(tok) for tok in tokens]
    except (TypeError, ValueError):
        raise MalformedInputError("non-numeric vector entry", source, number) from None
    if not all(np.isfinite(values)):
        raise _located(DataValidationError, "non-finite vector entry", source, number)
    return values


def load_embeddings(lines: Iterable[str], fmt: str = "text", source: Optional[str] = None) -> EmbeddingTable:
    if fmt not in EMBEDDING_FORMATS:
        raise DataValidationError(f"Unknown embedding format {fmt!r}; expected one of {EMBEDDING_FORMATS}.")
    names: List[str] = []
    rows: List[List[float]] = []
    where: Dict[str, int] = {}
    expected_rows, dim = None, None
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if fmt == "text" and expected_rows is None:
            header = line.split()
            if len(header) != 2 or not all(tok.isdigit() for tok in header):
                raise MalformedInputError("expected header 'N n'", source, number)
            expected_rows, dim = int(header[0]), int(header[1])
            continue
        if fmt == "text":
            # multi-word names are tab separated from the values
            name, tab, rest = line.partition("\t")
            tokens = [name.strip()] + rest.split() if tab else line.split()
            if len(tokens) != dim + 1:
                raise _located(DimensionMismatchError, f"expected {dim} values, got {len(tokens) - 1}",
                               source, number)
            name, values = tokens[0], _floats(tokens[1:], source, number)
        else:
            try:
                row = json.loads(line)
                name, vector = row["name"], row["vector"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise MalformedInputError("expected {\"name\", \"vector\"}", source, number) from None
            if not isinstance(name, str) or not isinstance(vector, list):
                raise MalformedInputError("expected a string name and a list vector", source, number)
            if dim is None:
                dim = len(vector)
            if len(vector) != dim:
                raise _located(DimensionMismatchError, f"expected {dim} values, got {len(vector)}",
                               source, number)
            values = _floats(vector, source, number)
        if name in where:
            raise _located(DuplicateNameError, f"duplicate name {name!r} (first seen on line {where[name]})",
                           source, number)
        where[name] = number
        names.append(name)
        rows.append(values)
    if expected_rows is not None and expected_rows != len(rows):
        raise DimensionMismatchError(f"Header announces {expected_rows} rows, file has {len(rows)}.")
    vectors = np.array(rows, dtype=float).reshape(len(rows), dim or 0)
    return EmbeddingTable(names=names, vectors=vectors)


class DistanceRow(BaseModel):
    pair: int
    hop: int
    source: str
    relation: str
    hyperbolic: float
    euclidean: float
    larger: bool


class DistanceComparison(BaseModel):
    hop_pcts: List[float]
    n_pairs: int
    rows: List[DistanceRow] = []

    def summary(self) -> Dict[str, float]:
        out: Dict[str, float] = {f"hop{h + 1}_pct": pct for h, pct in enumerate(self.hop_pcts)}
        out["n_pairs"] = self.n_pairs
        return out


def _lookup(table: EmbeddingTable, index: Dict[str, int], name: str, pair: int, kind: str) -> int:
    if name not in index:
        raise MissingNameError(f"Pair {pair}: {name!r} is missing from the {kind} embeddings.")
    return index[name]


def distance_comparison(hyperbolic: EmbeddingTable, euclidean: EmbeddingTable, pairs: Sequence[PathPairs],
                        c: float, in_ball: bool = False) -> DistanceComparison:
    """Per hop, the percentage of (source, relation) pairs whose ball distance exceeds the Euclidean one."""
    if not pairs:
        raise EmptyInputError("Distance comparison needs at least one pair.")
    c = Curvature(c=c).c
    h_index, e_index = hyperbolic.index(), euclidean.index()
    ball = hyperbolic.vectors
    if in_ball:
        check_in_ball(ball, c)
    elif len(ball):
        ball = exp0(ball, c)

    hops = max(len(p.relations) for p in pairs)
    pcts: List[float] = []
    rows: List[DistanceRow] = []
    for hop in range(hops):
        members = [(i, p) for i, p in enumerate(pairs) if len(p.relations) > hop]
        src_h = [_lookup(hyperbolic, h_index, p.source, i, "hyperbolic") for i, p in members]
        rel_h = [_lookup(hyperbolic, h_index, p.relations[hop], i, "hyperbolic") for i, p in members]
        src_e = [_lookup(euclidean, e_index, p.source, i, "Euclidean") for i, p in members]
        rel_e = [_lookup(euclidean, e_index, p.relations[hop], i, "Euclidean") for i, p in members]
        d_hyp = np.atleast_1d(distance(ball[src_h], ball[rel_h], c))
        d_euc = np.linalg.norm(euclidean.vectors[src_e] - euclidean.vectors[rel_e], axis=-1)
        larger = d_hyp > d_euc
        pcts.append(100.0 * float(np.count_nonzero(larger)) / len(members))
        rows.extend(DistanceRow(pair=i, hop=hop + 1, source=p.source, relation=p.relations[hop],
                                hyperbolic=float(dh), euclidean=float(de), larger=bool(lg))
                    for (i, p), dh, de, lg in zip(members, d_hyp, d_euc, larger))
    rows.sort(key=lambda row: (row.pair, row.hop))
    return DistanceComparison(hop_pcts=pcts, n_pairs=len(pairs), rows=rows)


def curvature_init_policy(estimate: DeltaEstimate) -> Curvature:
    return Curvature(c=curvature_from_delta(estimate.mean))
