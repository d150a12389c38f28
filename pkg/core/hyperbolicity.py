"""
Gromov delta-hyperbolicity of finite metric samples.

The default estimator fixes a base point w, forms the Gromov matrix
A[i, j] = (i, j)_w and takes the largest entry of (A (x) A) - A, where
(x) is the max-min matrix product. The four-point scan over all quadruples
is kept as an exhaustive check for small samples.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import pdist, squareform

from core.config import resolve_workers, settings
from core.exceptions import (CurvatureUndefinedError, DataValidationError, DegenerateSampleError,
                             SampleCapExceededError)
from core.geometry import check_curvature, exp0, pairwise_distance
from core.models import DeltaEstimate, DistanceMatrix, EmbeddingTable

logger = logging.getLogger(__name__)

CURVATURE_SCALE = 0.144
# elements of the (rows, N, N) temporary built per block
BLOCK_ELEMENTS = 1 << 23
# distinct entries up to which the level-wise product is used
MAX_LEVELS = 256


def _matrix(D) -> np.ndarray:
    if isinstance(D, DistanceMatrix):
        return D.d
    return DistanceMatrix(d=D).d


def _index(d: np.ndarray, i: int) -> int:
    n = d.shape[0]
    if not isinstance(i, (int, np.integer)) or not 0 <= i < n:
        raise DataValidationError(f"Index {i} is out of range for {n} points.")
    return int(i)


def gromov_product(D, x: int, y: int, w: int) -> float:
    d = _matrix(D)
    x, y, w = (_index(d, i) for i in (x, y, w))
    return float((d[x, w] + d[y, w] - d[x, y]) / 2.0)


def gromov_matrix(D, w: int = 0) -> np.ndarray:
    d = _matrix(D)
    w = _index(d, w)
    col = d[:, w]
    return (col[:, None] + col[None, :] - d) / 2.0


def _max_min_by_levels(A: np.ndarray, levels: np.ndarray) -> np.ndarray:
    # out[i, j] >= t exactly when some k has A[i, k] >= t and A[k, j] >= t
    out = np.full_like(A, levels[0])
    for t in levels[1:]:
        above = (A >= t).astype(np.float32)
        reach = (above @ above) > 0
        if not reach.any():
            break
        out[reach] = t
    return out


def max_min_product(A: np.ndarray, workers: Optional[int] = None,
                    block_elements: int = BLOCK_ELEMENTS, max_levels: int = MAX_LEVELS) -> np.ndarray:
    """(A (x) A)[i, j] = max_k min(A[i, k], A[k, j]).

    Matrices with at most ``max_levels`` distinct entries (graph metrics) go
    through one boolean matrix product per level; anything else is reduced
    in row blocks of about ``block_elements`` temporaries.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise DataValidationError(f"max-min product needs a square matrix, got shape {A.shape}.")
    out = np.empty_like(A)
    if n == 0:
        return out
    levels = np.unique(A)
    if len(levels) <= max_levels:
        return _max_min_by_levels(A, levels)
    rows = max(1, block_elements // (n * n))
    starts = list(range(0, n, rows))

    def fill(start: int) -> None:
        stop = min(start + rows, n)
        out[start:stop] = np.minimum(A[start:stop, :, None], A[None, :, :]).max(axis=1)

    workers = min(resolve_workers(workers), len(starts))
    if workers <= 1:
        for start in starts:
            fill(start)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    return out


def delta_fixed_base(D, w: int = 0, workers: Optional[int] = None) -> float:
    d = _matrix(D)
    if d.shape[0] < 3:
        raise DataValidationError(f"Fixed-base delta needs at least 3 points, got {d.shape[0]}.")
    A = gromov_matrix(d, w)
    return float(np.max(max_min_product(A, workers) - A))


def delta_bruteforce(D, cap: Optional[int] = None) -> float:
    """Smallest delta satisfying the four-point condition over every quadruple."""
    d = _matrix(D)
    n = d.shape[0]
    cap = settings.bruteforce_cap if cap is None else cap
    if n < 4:
        raise DataValidationError(f"Four-point scan needs at least 4 points, got {n}.")
    if n > cap:
        raise SampleCapExceededError(f"Four-point scan is capped at {cap} points, got {n}.")
    quads = np.array(list(itertools.combinations(range(n), 4)))
    a, b, c, e = quads.T
    sums = np.stack([d[a, b] + d[c, e], d[a, c] + d[b, e], d[a, e] + d[b, c]], axis=1)
    sums.sort(axis=1)
    # degenerate quadruples never exceed zero
    return max(0.0, float(np.max(sums[:, 2] - sums[:, 1])) / 2.0)


def diameter(D) -> float:
    d = _matrix(D)
    if d.shape[0] == 0:
        raise DataValidationError("Diameter of an empty sample is undefined.")
    return float(np.max(d))


def relative_delta(delta: float, diam: float) -> float:
    if diam <= 0:
        raise DegenerateSampleError("Sample has zero diameter; relative delta is undefined.")
    return 2.0 * delta / diam


def curvature_from_delta(delta_rel: float) -> float:
    if not delta_rel > 0:
        raise CurvatureUndefinedError(
            f"Curvature is undefined for relative delta {delta_rel}; the sample is tree-like.")
    return (CURVATURE_SCALE / delta_rel) ** 2


class MetricSource:
    """Points addressable by index 0..size-1 with a pairwise metric."""
    name = "metric"

    @property
    def size(self) -> int:
        raise NotImplementedError

    def distances(self, indices: Sequence[int]) -> DistanceMatrix:
        raise NotImplementedError


class GraphMetricSource(MetricSource):
    """Undirected unit-weight shortest paths inside the largest connected component."""
    name = "graph"

    def __init__(self, graph):
        self._graph = graph
        adjacency = graph.undirected_csr()
        if graph.num_entities == 0:
            self._nodes = np.empty(0, dtype=int)
        else:
            _, labels = connected_components(adjacency, directed=False)
            largest = np.argmax(np.bincount(labels))
            self._nodes = np.flatnonzero(labels == largest)
            dropped = graph.num_entities - len(self._nodes)
            if dropped:
                logger.warning("Excluding %d of %d entities outside the largest connected component.",
                               dropped, graph.num_entities)
        self._adjacency = adjacency

    @property
    def size(self) -> int:
        return len(self._nodes)

    def distances(self, indices: Sequence[int]) -> DistanceMatrix:
        nodes = self._nodes[np.asarray(indices, dtype=int)]
        d = shortest_path(self._adjacency, method="D", directed=False, unweighted=True, indices=nodes)
        names = self._graph.entities
        return DistanceMatrix(d=d[:, nodes], labels=[names[i] for i in nodes])


class EmbeddingMetricSource(MetricSource):
    """Rows of an embedding table under Euclidean or Poincaré-ball distance."""

    def __init__(self, table: EmbeddingTable, metric: str = "euclidean", c: float = 1.0):
        if metric not in ("euclidean", "poincare"):
            raise DataValidationError(f"Unknown embedding metric {metric!r}.")
        self._table = table
        self._metric = metric
        self._c = check_curvature(c)
        self.name = f"embedding-{metric}"

    @property
    def size(self) -> int:
        return len(self._table.names)

    def distances(self, indices: Sequence[int]) -> DistanceMatrix:
        idx = np.asarray(indices, dtype=int)
        vectors = self._table.vectors[idx]
        if self._metric == "euclidean":
            d = squareform(pdist(vectors)) if len(idx) > 1 else np.zeros((len(idx), len(idx)))
        else:
            d = pairwise_distance(exp0(vectors, self._c), self._c)
            d = (d + d.T) / 2.0
            np.fill_diagonal(d, 0.0)
        return DistanceMatrix(d=d, labels=[self._table.names[i] for i in idx])


def estimate(source: MetricSource, sample_size: int = 1500, repeats: int = 5, seed: int = 42,
             workers: Optional[int] = None) -> DeltaEstimate:
    available = source.size
    if available < 4:
        raise DataValidationError(f"Metric source yields {available} points; at least 4 are needed.")
    if sample_size < 4 or repeats < 1:
        raise DataValidationError("sample_size must be at least 4 and repeats at least 1.")
    if sample_size > available:
        logger.warning("Sample size %d exceeds the %d available points; sampling all of them.",
                       sample_size, available)
        sample_size = available

    deltas: List[float] = []
    diams: List[float] = []
    rels: List[float] = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(repeats)):
        rng = np.random.default_rng(child)
        sample = np.sort(rng.choice(available, size=sample_size, replace=False))
        D = source.distances(sample)
        if not D.connected:
            raise DataValidationError("Sampled points are not mutually reachable.")
        delta = delta_fixed_base(D, 0, workers)
        diam = diameter(D)
        rel = relative_delta(delta, diam)
        logger.debug("repeat %d: delta=%.6g diam=%.6g delta_rel=%.6g", i, delta, diam, rel)
        deltas.append(delta)
        diams.append(diam)
        rels.append(rel)

    mean = float(np.mean(rels))
    curvature, curvature_error = None, None
    try:
        curvature = curvature_from_delta(mean)
    except CurvatureUndefinedError as exc:
        curvature_error = exc.message
        logger.warning(curvature_error)
    return DeltaEstimate(
        delta_rel_values=rels,
        delta_per_repeat=deltas,
        diameter_per_repeat=diams,
        mean=mean,
        std=float(np.std(rels)),
        curvature=curvature,
        curvature_error=curvature_error,
        seed=seed,
        sample_size=sample_size,
        repeats=repeats,
        metric=source.name,
    )