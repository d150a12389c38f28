import logging
from typing import List, Optional, Sequence

import numpy as np

from core import hlayer
from core.exceptions import DimensionMismatchError, GradientCheckError
from core.geometry import exp0
from core.models import EmbeddingTable
from data import OutputContext, write_json
from data.embedding_repository import EmbeddingRepositoryInterface
from service import service_call

logger = logging.getLogger(__name__)

GRADCHECK_THRESHOLD = 1e-5
GRADCHECK_POSITIONS = 8


class LayerServiceInterface:
    def transform(self, table: EmbeddingTable, params: hlayer.PoincareLinearParams, paper_literal: bool = False,
                  gradcheck: bool = False, seed: int = 42, output=None) -> dict:
        """
        Runs every row of ``table`` through the Euclidean-in/Euclidean-out layer pipeline.

        With ``gradcheck`` the analytic backward pass is compared with central differences at
        sampled positions; a report is still written before GradientCheckError is raised.
        """
        pass

    def train(self, dataset: hlayer.ToyDataset, curvatures: Sequence[float], steps: int, learning_rate: float,
              seed: int = 42, output=None, learn_curvature: bool = False) -> List[hlayer.SweepPoint]:
        """
        Trains one fresh layer per curvature. With ``learn_curvature`` each positive curvature
        is only a starting value and the point records the learned one.
        """
        pass


class LayerService(LayerServiceInterface):
    def __init__(self, embedding_repository: Optional[EmbeddingRepositoryInterface] = None):
        self.embedding_repository = embedding_repository

    def init_params(self, m: int, n: int, c: float, seed: int) -> hlayer.PoincareLinearParams:
        with service_call("init_params"):
            return hlayer.init_params(m, n, c, np.random.default_rng(seed))

    def transform(self, table: EmbeddingTable, params: hlayer.PoincareLinearParams, paper_literal: bool = False,
                  gradcheck: bool = False, seed: int = 42, output=None, save_params=None) -> dict:
        with service_call("transform"):
            if table.vectors.shape[0] and table.dim != params.n:
                raise DimensionMismatchError(f"Embeddings have dimension {table.dim}, layer expects {params.n}.")
            outputs = hlayer.sequence_transform(table.vectors, params, paper_literal=paper_literal)
            report = {
                "names": list(table.names),
                "outputs": outputs.tolist(),
                "metadata": {
                    "paper_literal_denominator": paper_literal,
                    "c": params.c,
                    "m": params.m,
                    "n": params.n,
                    "seed": seed,
                },
            }
            if gradcheck:
                report["gradcheck"] = self._gradcheck(table, params, paper_literal, seed)
            if output is not None or save_params is not None:
                with OutputContext():
                    if output is not None:
                        write_json(output, report)
                    if save_params is not None:
                        self.embedding_repository.save_params(save_params, params)
            if gradcheck and not report["gradcheck"]["passed"]:
                raise GradientCheckError(
                    f"Max relative gradient error {report['gradcheck']['max_rel_error']:.3g} "
                    f"exceeds {GRADCHECK_THRESHOLD}.")
            return report

    @staticmethod
    def _gradcheck(table: EmbeddingTable, params: hlayer.PoincareLinearParams, paper_literal: bool,
                   seed: int) -> dict:
        rng = np.random.default_rng(seed)
        count = len(table.names)
        positions = sorted(rng.choice(count, size=min(GRADCHECK_POSITIONS, count), replace=False).tolist())
        worst = 0.0
        for position in positions:
            x = exp0(table.vectors[position], params.c)
            upstream = rng.normal(size=params.m)
            errors = hlayer.gradcheck(x, params, upstream, paper_literal=paper_literal)
            logger.debug("gradcheck position %d: %s", position, errors)
            worst = max(worst, errors["max"])
        return {
            "max_rel_error": worst,
            "positions": positions,
            "threshold": GRADCHECK_THRESHOLD,
            "passed": worst <= GRADCHECK_THRESHOLD,
        }

    def train(self, dataset: hlayer.ToyDataset, curvatures: Sequence[float], steps: int, learning_rate: float,
              seed: int = 42, output=None, learn_curvature: bool = False) -> List[hlayer.SweepPoint]:
        with service_call("train"):
            points = hlayer.curvature_sweep(dataset, curvatures, steps, learning_rate, seed,
                                            learn_curvature=learn_curvature)
            if output is not None:
                with OutputContext():
                    write_json(output, {"seed": seed, "steps": steps, "learning_rate": learning_rate,
                                        "learn_curvature": learn_curvature,
                                        "points": [p.model_dump() for p in points]})
            return points
