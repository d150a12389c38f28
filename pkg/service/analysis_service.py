import csv
import logging
from typing import Optional, Sequence

from core import analysis
from core.models import DeltaEstimate, EmbeddingTable, PathPairs, PredictionRecord
from data import OutputContext, get_current_output_context, write_json
from service import service_call

logger = logging.getLogger(__name__)

ROW_FIELDS = ["pair", "hop", "source", "relation", "hyperbolic", "euclidean", "larger"]


class AnalysisServiceInterface:
    def exact_match(self, records: Sequence[PredictionRecord], output=None) -> dict:
        """
        Returns ``{"em": percentage, "n": count}``.

        Raises:
            EmptyInputError: If there are no records.
        """
        pass

    def distance_comparison(self, hyperbolic: EmbeddingTable, euclidean: EmbeddingTable,
                            pairs: Sequence[PathPairs], c: float, in_ball: bool = False, output=None,
                            csv_output=None) -> analysis.DistanceComparison:
        """
        Raises:
            MissingNameError: If a pair names an entity or relation absent from a table.
        """
        pass

    def initial_curvature(self, estimate: DeltaEstimate) -> float:
        """
        Starting curvature of a layer, derived from the mean relative delta.

        Raises:
            CurvatureUndefinedError: If the mean relative delta is not positive.
        """
        pass


class AnalysisService(AnalysisServiceInterface):

    def exact_match(self, records: Sequence[PredictionRecord], output=None) -> dict:
        with service_call("exact_match"):
            result = {"em": analysis.em_score(records), "n": len(records)}
            if output is not None:
                with OutputContext():
                    write_json(output, result)
            return result

    def distance_comparison(self, hyperbolic: EmbeddingTable, euclidean: EmbeddingTable,
                            pairs: Sequence[PathPairs], c: float, in_ball: bool = False, output=None,
                            csv_output=None) -> analysis.DistanceComparison:
        with service_call("distance_comparison"):
            result = analysis.distance_comparison(hyperbolic, euclidean, pairs, c, in_ball)
            if output is not None or csv_output is not None:
                with OutputContext():
                    if output is not None:
                        write_json(output, result.summary())
                    if csv_output is not None:
                        with get_current_output_context().open(csv_output, newline="") as handle:
                            writer = csv.DictWriter(handle, fieldnames=ROW_FIELDS, lineterminator="\n")
                            writer.writeheader()
                            for row in result.rows:
                                writer.writerow(row.model_dump())
            return result

    def initial_curvature(self, estimate: DeltaEstimate) -> float:
        with service_call("initial_curvature"):
            c = analysis.curvature_init_policy(estimate).c
            logger.info("initial curvature %.4g from delta_rel %.4f (seed %d)", c, estimate.mean, estimate.seed)
            return c
