import json
import logging
from typing import Optional

from pydantic import ValidationError

from core import hyperbolicity
from core.exceptions import MalformedInputError
from core.models import DeltaEstimate, EmbeddingTable
from data import OutputContext, read_lines, write_json
from service import service_call

logger = logging.getLogger(__name__)


class DeltaServiceInterface:
    def estimate(self, source: hyperbolicity.MetricSource, sample_size: int, repeats: int, seed: int,
                 workers: Optional[int] = None, output=None) -> DeltaEstimate:
        """
        Runs the sampling protocol on a metric source and optionally writes the JSON record.

        Raises:
            DataValidationError: If the source yields fewer than 4 points.
            DegenerateSampleError: If a sample has zero diameter.
            HyperHopException: If an unexpected error occurs.
        """
        pass

    def load_estimate(self, path) -> DeltaEstimate:
        """
        Reads a record written by ``estimate``.

        Raises:
            RecordNotFoundError: If the file does not exist.
            MalformedInputError: If the file is not a delta record.
        """
        pass

    def curvature(self, delta_rel: float) -> float:
        """
        Raises:
            CurvatureUndefinedError: If delta_rel is not positive.
        """
        pass


class DeltaService(DeltaServiceInterface):

    def graph_source(self, graph) -> hyperbolicity.GraphMetricSource:
        with service_call("graph_source"):
            return hyperbolicity.GraphMetricSource(graph)

    def embedding_source(self, table: EmbeddingTable, metric: str = "euclidean",
                         c: float = 1.0) -> hyperbolicity.EmbeddingMetricSource:
        with service_call("embedding_source"):
            return hyperbolicity.EmbeddingMetricSource(table, metric, c)

    def estimate(self, source: hyperbolicity.MetricSource, sample_size: int, repeats: int, seed: int,
                 workers: Optional[int] = None, output=None) -> DeltaEstimate:
        with service_call("estimate"):
            result = hyperbolicity.estimate(source, sample_size, repeats, seed, workers)
            logger.info("delta_rel %.4f +/- %.4f over %d repeats of %d points",
                        result.mean, result.std, result.repeats, result.sample_size)
            if output is not None:
                with OutputContext():
                    write_json(output, result.model_dump(mode="json"))
            return result

    def load_estimate(self, path) -> DeltaEstimate:
        text = "".join(read_lines(path))
        try:
            return DeltaEstimate.model_validate(json.loads(text))
        except json.JSONDecodeError as e:
            raise MalformedInputError(f"invalid JSON: {e.msg}", str(path), e.lineno) from None
        except ValidationError as e:
            raise MalformedInputError(f"not a delta record ({e.errors()[0]['msg']})", str(path)) from None

    def curvature(self, delta_rel: float) -> float:
        with service_call("curvature"):
            return hyperbolicity.curvature_from_delta(delta_rel)
