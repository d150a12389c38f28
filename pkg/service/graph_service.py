import csv
import logging
from typing import Dict, List, Optional, Sequence, Tuple

from core import kg
from core.exceptions import AmbiguousEvidenceError, EmptyInputError, HyperHopException
from core.models import (GraphStats, HoppingBatch, MetaQARecord, ParsingExample, QuestionRecord, Triple, TripleBatch,
                         Walk)
from data import OutputContext, get_current_output_context
from data.graph_repository import GraphRepositoryInterface
from data.question_repository import QuestionRepositoryInterface
from service import service_call

logger = logging.getLogger(__name__)


class EvidenceReport:
    def __init__(self):
        self.records: List[QuestionRecord] = []
        self.failures: List[dict] = []


class GraphServiceInterface:
    def load_graph(self, path, fmt: Optional[str] = None, strict: bool = True,
                   add_inverse_relations: bool = False) -> Tuple[kg.KnowledgeGraph, TripleBatch]:
        """
        Reads a triple file and builds the directed knowledge graph.

        Raises:
            MalformedInputError: On a bad line in strict mode.
            HyperHopException: If an unexpected error occurs.
        """
        pass

    def graph_stats(self, graph: kg.KnowledgeGraph) -> GraphStats:
        pass

    def degree_histogram(self, graph: kg.KnowledgeGraph, output=None) -> Dict[int, float]:
        """
        Out-degree distribution, optionally written as an ``out_degree,proportion`` CSV.

        Raises:
            EmptyInputError: If the graph has no nodes.
        """
        pass

    def hopping_examples(self, graph: kg.KnowledgeGraph, starts: Optional[Sequence[str]], hops: int,
                         walks_per_start: int, seed: int, heldout: Sequence[Walk] = (), mode: str = "exact",
                         output=None, walks_output=None) -> Tuple[List[Walk], HoppingBatch]:
        """
        Generates seeded random walks and turns them into hopping examples, dropping held-out walks.
        """
        pass

    def metaqa_evidence(self, graph: kg.KnowledgeGraph, records: Sequence[MetaQARecord],
                        mapping: Dict[Tuple[str, str], str], hops: int = 2, output=None,
                        errors_output=None) -> EvidenceReport:
        """
        Builds one evidence chain per MetaQA record; failed records go to the error report.
        """
        pass

    def extract_subgraph(self, graph: kg.KnowledgeGraph, questions: Sequence[QuestionRecord], output=None,
                         errors_output=None) -> kg.SubgraphResult:
        """
        Keeps only the triples on question evidence paths; unusable questions are reported, not fatal.
        """
        pass

    def parsing_examples(self, questions: Sequence[QuestionRecord], hops: int = 2, separator: str = "; ",
                         output=None) -> List[ParsingExample]:
        """
        Raises:
            MissingAnnotationError: If a question lacks its source entity or a relation path of ``hops``.
        """
        pass


class GraphService(GraphServiceInterface):
    def __init__(self, graph_repository: GraphRepositoryInterface,
                 question_repository: Optional[QuestionRepositoryInterface] = None):
        self.graph_repository = graph_repository
        self.question_repository = question_repository

    def load_graph(self, path, fmt: Optional[str] = None, strict: bool = True,
                   add_inverse_relations: bool = False) -> Tuple[kg.KnowledgeGraph, TripleBatch]:
        with service_call("load_graph"):
            batch = self.graph_repository.load_triples(path, fmt, strict)
            graph = kg.build_graph(batch.triples, add_inverse_relations)
            logger.info("Loaded %r from %s", graph, path)
            return graph, batch

    def build_graph(self, triples: Sequence[Triple], add_inverse_relations: bool = False) -> kg.KnowledgeGraph:
        with service_call("build_graph"):
            return kg.build_graph(triples, add_inverse_relations)

    def graph_stats(self, graph: kg.KnowledgeGraph) -> GraphStats:
        with service_call("graph_stats"):
            return kg.graph_stats(graph)

    def degree_histogram(self, graph: kg.KnowledgeGraph, output=None) -> Dict[int, float]:
        with service_call("degree_histogram"):
            histogram = kg.out_degree_histogram(graph)
            if output is not None:
                with OutputContext():
                    with get_current_output_context().open(output, newline="") as handle:
                        writer = csv.writer(handle, lineterminator="\n")
                        writer.writerow(["out_degree", "proportion"])
                        for degree, proportion in histogram.items():
                            writer.writerow([degree, repr(proportion)])
            return histogram

    def hopping_examples(self, graph: kg.KnowledgeGraph, starts: Optional[Sequence[str]], hops: int,
                         walks_per_start: int, seed: int, heldout: Sequence[Walk] = (), mode: str = "exact",
                         output=None, walks_output=None, workers: Optional[int] = 1,
                         include_short: bool = False) -> Tuple[List[Walk], HoppingBatch]:
        with service_call("hopping_examples"):
            walks = kg.generate_walks(graph, starts, hops, walks_per_start, seed, workers)
            batch = kg.build_hopping_examples(graph, walks, heldout, mode, include_short)
            if output is not None or walks_output is not None:
                with OutputContext():
                    if output is not None:
                        self.graph_repository.save_examples(output, batch.examples)
                    if walks_output is not None:
                        self.graph_repository.save_walks(walks_output, walks)
            return walks, batch

    def metaqa_evidence(self, graph: kg.KnowledgeGraph, records: Sequence[MetaQARecord],
                        mapping: Dict[Tuple[str, str], str], hops: int = 2, output=None,
                        errors_output=None) -> EvidenceReport:
        with service_call("metaqa_evidence"):
            if not mapping:
                raise EmptyInputError("Pair-to-relation mapping is empty.")
            report = EvidenceReport()
            for record in records:
                try:
                    report.records.append(kg.metaqa_evidence(record, graph, mapping, hops))
                except AmbiguousEvidenceError as e:
                    report.failures.append({"id": record.id, "error": type(e).__name__, "message": e.message,
                                            "candidates": e.candidates})
                except HyperHopException as e:
                    report.failures.append({"id": record.id, "error": type(e).__name__, "message": e.message})
            if report.failures:
                logger.warning("%d of %d records have no usable evidence", len(report.failures), len(records))
            if output is not None:
                with OutputContext():
                    self.question_repository.save_records(output, report.records)
                    if errors_output is not None:
                        self.question_repository.save_records(errors_output, report.failures)
            return report

    def extract_subgraph(self, graph: kg.KnowledgeGraph, questions: Sequence[QuestionRecord], output=None,
                         errors_output=None) -> kg.SubgraphResult:
        with service_call("extract_subgraph"):
            result = kg.extract_question_subgraph(graph, questions)
            logger.info("Subgraph of %d questions: %r", len(questions), result.graph)
            if output is not None:
                with OutputContext():
                    self.graph_repository.save_triples(output, result.graph.triples())
                    if errors_output is not None:
                        self.question_repository.save_records(
                            errors_output, ({"id": qid, "message": reason} for qid, reason in result.failures.items()))
            return result

    def parsing_examples(self, questions: Sequence[QuestionRecord], hops: int = 2, separator: str = "; ",
                         output=None) -> List[ParsingExample]:
        with service_call("parsing_examples"):
            examples = kg.build_parsing_examples(questions, hops)
            if output is not None:
                with OutputContext():
                    self.question_repository.save_records(
                        output, ({"question": e.question, "target": kg.serialize_sequence(e.target, separator)}
                                 for e in examples))
            return examples

    def split_questions(self, records: Sequence, ratios: Tuple[float, float, float], seed: int,
                        outputs: Optional[Tuple[str, str, str]] = None) -> Tuple[list, list, list]:
        with service_call("split_questions"):
            parts = kg.split_questions(records, ratios, seed)
            if outputs is not None:
                with OutputContext():
                    for path, part in zip(outputs, parts):
                        self.question_repository.save_records(path, part)
            return parts
