"""
Knowledge-graph construction and the data procedures built on it.

Edges are directed for walks and degrees. Metric computations treat every
edge as an undirected unit-weight link.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from core.config import resolve_workers
from core.exceptions import (AmbiguousEvidenceError, DataValidationError, EmptyInputError,
                             MalformedInputError, MissingAnnotationError, MissingEvidenceError,
                             MissingNameError, UnknownPairError)
from core.models import (DistanceMatrix, GraphStats, HoppingBatch, HoppingExample, MetaQARecord,
                         ParsingExample, QuestionRecord, Triple, TripleBatch, Walk)

logger = logging.getLogger(__name__)

TRIPLE_FORMATS = ("tsv", "pipe", "jsonl")
EXCLUSION_MODES = ("exact", "subpath", "edge")
INVERSE_SUFFIX = "_reversed"
PATH_SEPARATOR = "_to_"


class KnowledgeGraph:
    """Immutable directed multigraph of entity-relation-entity edges."""

    def __init__(self, entities: Sequence[str], relations: Sequence[str],
                 edges: Iterable[Tuple[int, int, int]]):
        self._entities = tuple(entities)
        self._relations = tuple(relations)
        self._entity_index = {name: i for i, name in enumerate(self._entities)}
        self._relation_index = {name: i for i, name in enumerate(self._relations)}
        out: List[List[Tuple[int, int]]] = [[] for _ in self._entities]
        seen = set()
        for h, r, t in edges:
            if (h, r, t) in seen:
                continue
            seen.add((h, r, t))
            out[h].append((r, t))
        self._edges = frozenset(seen)
        self._out = tuple(tuple(row) for row in out)

    @property
    def entities(self) -> Tuple[str, ...]:
        return self._entities

    @property
    def relations(self) -> Tuple[str, ...]:
        return self._relations

    @property
    def num_entities(self) -> int:
        return len(self._entities)

    @property
    def num_relations(self) -> int:
        return len(self._relations)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def has_entity(self, name: str) -> bool:
        return name in self._entity_index

    def entity_index(self, name: str) -> int:
        try:
            return self._entity_index[name]
        except KeyError:
            raise MissingNameError(f"Entity {name!r} is not in the graph.") from None

    def edges_at(self, index: int) -> Tuple[Tuple[int, int], ...]:
        """Outgoing ``(relation index, tail index)`` pairs of the entity at ``index``."""
        return self._out[index]

    def out_edges(self, entity: str) -> List[Tuple[str, str]]:
        return [(self._relations[r], self._entities[t]) for r, t in self._out[self.entity_index(entity)]]

    def out_degree(self, entity: str) -> int:
        return len(self._out[self.entity_index(entity)])

    def out_degrees(self) -> np.ndarray:
        return np.array([len(row) for row in self._out], dtype=int)

    def tails(self, head: str, relation: str) -> List[str]:
        if head not in self._entity_index or relation not in self._relation_index:
            return []
        r = self._relation_index[relation]
        return [self._entities[t] for rr, t in self._out[self._entity_index[head]] if rr == r]

    def has_edge(self, head: str, relation: str, tail: str) -> bool:
        try:
            key = (self._entity_index[head], self._relation_index[relation], self._entity_index[tail])
        except KeyError:
            return False
        return key in self._edges

    def triples(self) -> List[Triple]:
        return [Triple(head=self._entities[h], relation=self._relations[r], tail=self._entities[t])
                for h in range(len(self._out)) for r, t in self._out[h]]

    @cached_property
    def _undirected(self) -> csr_matrix:
        n = len(self._entities)
        if not self._edges:
            return csr_matrix((n, n))
        heads, _, tails = (np.array(col) for col in zip(*self._edges))
        ones = np.ones(len(heads))
        adjacency = csr_matrix((ones, (heads, tails)), shape=(n, n))
        return (adjacency + adjacency.T).tocsr()

    def undirected_csr(self) -> csr_matrix:
        return self._undirected

    def __repr__(self) -> str:
        return (f"KnowledgeGraph(entities={self.num_entities}, relations={self.num_relations}, "
                f"edges={self.num_edges})")


class SubgraphResult(NamedTuple):
    graph: KnowledgeGraph
    failures: Dict[str, str]


def _parse_line(line: str, fmt: str) -> Triple:
    if fmt == "jsonl":
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataValidationError(f"invalid JSON: {e.msg}") from e
        if not isinstance(row, dict):
            raise DataValidationError("expected a JSON object")
        fields = [row.get(short, row.get(long)) for short, long in
                  (("h", "head"), ("r", "relation"), ("t", "tail"))]
        if any(not isinstance(f, str) for f in fields):
            raise DataValidationError("expected string fields h, r, t")
    else:
        fields = line.split("\t" if fmt == "tsv" else "|")
        if len(fields) != 3:
            raise DataValidationError(f"expected 3 fields, got {len(fields)}")
    try:
        return Triple(head=fields[0], relation=fields[1], tail=fields[2])
    except ValidationError:
        raise DataValidationError("empty field") from None


def load_triples(lines: Iterable[str], fmt: str = "tsv", strict: bool = True,
                 source: Optional[str] = None) -> TripleBatch:
    if fmt not in TRIPLE_FORMATS:
        raise DataValidationError(f"Unknown triple format {fmt!r}; expected one of {TRIPLE_FORMATS}.")
    triples: List[Triple] = []
    seen = set()
    duplicates = 0
    skipped: List[str] = []
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        try:
            triple = _parse_line(line, fmt)
        except DataValidationError as e:
            error = MalformedInputError(e.message, source, number)
            if strict:
                raise error from e
            logger.warning("Skipping %s", error.message)
            skipped.append(error.message)
            continue
        if triple.key() in seen:
            duplicates += 1
            continue
        seen.add(triple.key())
        triples.append(triple)
    if duplicates:
        logger.info("Dropped %d duplicate triples", duplicates)
    return TripleBatch(triples=triples, duplicate_count=duplicates, skipped=skipped)


def inverse_relation(relation: str) -> str:
    return relation + INVERSE_SUFFIX


def build_graph(triples: Iterable[Triple], add_inverse_relations: bool = False) -> KnowledgeGraph:
    entity_index: Dict[str, int] = {}
    relation_index: Dict[str, int] = {}
    edges: List[Tuple[int, int, int]] = []

    def add(head: str, relation: str, tail: str) -> None:
        h = entity_index.setdefault(head, len(entity_index))
        r = relation_index.setdefault(relation, len(relation_index))
        t = entity_index.setdefault(tail, len(entity_index))
        edges.append((h, r, t))

    for triple in triples:
        add(triple.head, triple.relation, triple.tail)
        if add_inverse_relations:
            add(triple.tail, inverse_relation(triple.relation), triple.head)
    return KnowledgeGraph(list(entity_index), list(relation_index), edges)


def graph_stats(graph: KnowledgeGraph) -> GraphStats:
    return GraphStats(nodes=graph.num_entities, edges=graph.num_edges, relations=graph.num_relations)


def find_chains(graph: KnowledgeGraph, source: str, relations: Sequence[str],
                answer: Optional[str] = None) -> List[List[str]]:
    """Every walk from ``source`` following ``relations`` in order, ending at ``answer`` when given."""
    if not graph.has_entity(source):
        return []
    partial = [[source]]
    for relation in relations:
        partial = [seq + [relation, tail] for seq in partial for tail in graph.tails(seq[-1], relation)]
        if not partial:
            return []
    if answer is not None:
        partial = [seq for seq in partial if seq[-1] == answer]
    return partial


def validate_walk(graph: KnowledgeGraph, walk) -> Walk:
    if not isinstance(walk, Walk):
        try:
            walk = Walk(sequence=list(walk))
        except ValidationError:
            raise DataValidationError(f"{walk!r} does not alternate entities and relations.") from None
    if not graph.has_entity(walk.sequence[0]):
        raise DataValidationError(f"Walk starts at unknown entity {walk.sequence[0]!r}.")
    for head, relation, tail in walk.edges():
        if not graph.has_edge(head, relation, tail):
            raise DataValidationError(f"({head}, {relation}, {tail}) is not an edge of the graph.")
    return walk


def extract_question_subgraph(graph: KnowledgeGraph, questions: Iterable[QuestionRecord]) -> SubgraphResult:
    kept: Dict[Tuple[str, str, str], None] = {}
    failures: Dict[str, str] = {}
    for question in questions:
        if question.evidence:
            try:
                chains = [validate_walk(graph, question.evidence).sequence]
            except DataValidationError as e:
                failures[question.id] = e.message
                continue
        elif question.source and question.relations and question.answer:
            chains = find_chains(graph, question.source, question.relations, question.answer)
            if not chains:
                failures[question.id] = (f"No path {question.source} -> {' -> '.join(question.relations)} "
                                         f"-> {question.answer} in the graph.")
                continue
        else:
            failures[question.id] = "Question has neither evidence nor (source, relations, answer)."
            continue
        for chain in chains:
            for edge in Walk(sequence=chain).edges():
                kept.setdefault(edge)
    for qid, reason in failures.items():
        logger.warning("Question %s: %s", qid, reason)
    subgraph = build_graph(Triple(head=h, relation=r, tail=t) for h, r, t in kept)
    return SubgraphResult(subgraph, failures)


def random_walk(graph: KnowledgeGraph, start: str, hops: int, rng: np.random.Generator) -> Walk:
    if hops < 1:
        raise DataValidationError(f"hops must be at least 1, got {hops}.")
    current = graph.entity_index(start)
    sequence = [start]
    for _ in range(hops):
        edges = graph.edges_at(current)
        if not edges:
            return Walk(sequence=sequence, short=True)
        relation, current = edges[rng.integers(len(edges))]
        sequence += [graph.relations[relation], graph.entities[current]]
    return Walk(sequence=sequence)


def generate_walks(graph: KnowledgeGraph, starts: Optional[Sequence[str]] = None, hops: int = 2,
                   walks_per_start: int = 1, seed: int = 42, workers: Optional[int] = 1) -> List[Walk]:
    """Seeded walks; start i draws from the i-th child of ``SeedSequence(seed)``."""
    starts = list(graph.entities if starts is None else starts)
    for start in starts:
        graph.entity_index(start)
    children = np.random.SeedSequence(seed).spawn(len(starts))

    def walks_from(job: Tuple[str, np.random.SeedSequence]) -> List[Walk]:
        start, child = job
        rng = np.random.default_rng(child)
        return [random_walk(graph, start, hops, rng) for _ in range(walks_per_start)]

    jobs = list(zip(starts, children))
    workers = min(resolve_workers(workers), max(1, len(jobs)))
    if workers <= 1:
        batches = [walks_from(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(walks_from, jobs))
    return [walk for batch in batches for walk in batch]


def _windows(sequence: Sequence[str]) -> Iterable[Tuple[str, ...]]:
    # contiguous pieces that start and end on an entity and span at least one edge
    for i in range(0, len(sequence), 2):
        for j in range(i + 3, len(sequence) + 1, 2):
            yield tuple(sequence[i:j])


def _excluder(heldout: Sequence[Walk], mode: str):
    exact = {tuple(w.sequence) for w in heldout}
    if mode == "exact":
        return lambda walk: tuple(walk.sequence) in exact
    if mode == "subpath":
        pieces = {piece for w in heldout for piece in _windows(w.sequence)}
        return lambda walk: (tuple(walk.sequence) in exact or tuple(walk.sequence) in pieces
                             or any(piece in exact for piece in _windows(walk.sequence)))
    if mode == "edge":
        edges = {edge for w in heldout for edge in w.edges()}
        return lambda walk: any(edge in edges for edge in walk.edges())
    raise DataValidationError(f"Unknown exclusion mode {mode!r}; expected one of {EXCLUSION_MODES}.")


def build_hopping_examples(graph: KnowledgeGraph, walks: Iterable[Walk], heldout: Iterable[Walk] = (),
                           mode: str = "exact", include_short: bool = False) -> HoppingBatch:
    is_heldout = _excluder(list(heldout), mode)
    batch = HoppingBatch()
    for walk in walks:
        walk = validate_walk(graph, walk)
        if walk.short and not include_short:
            batch.short_skipped += 1
            continue
        if is_heldout(walk):
            batch.excluded += 1
            continue
        batch.examples.append(HoppingExample(input=walk.incomplete(), target=list(walk.sequence)))
    logger.info("Built %d hopping examples (%d held out, %d short)",
                len(batch.examples), batch.excluded, batch.short_skipped)
    return batch


def build_parsing_examples(questions: Iterable[QuestionRecord], hops: int = 2) -> List[ParsingExample]:
    examples = []
    for question in questions:
        if not question.source or not question.relations:
            raise MissingAnnotationError(f"Question {question.id} lacks a source entity or relation path.")
        if len(question.relations) != hops:
            raise MissingAnnotationError(
                f"Question {question.id} has {len(question.relations)} relations, expected {hops}.")
        examples.append(ParsingExample(question=question.question,
                                       target=[question.source] + list(question.relations)))
    return examples


def serialize_sequence(sequence: Sequence[str], separator: str = "; ") -> str:
    return separator.join(sequence)


def out_degree_histogram(graph: KnowledgeGraph) -> Dict[int, float]:
    if graph.num_entities == 0:
        raise EmptyInputError("Out-degree distribution of an empty graph is undefined.")
    counts = np.bincount(graph.out_degrees())
    total = graph.num_entities
    return {degree: count / total for degree, count in enumerate(counts.tolist()) if count}


def branching_share(histogram: Dict[int, float]) -> float:
    """Share of nodes with out-degree 2 or more."""
    return float(sum(p for degree, p in histogram.items() if degree >= 2))


def parse_pair_mapping(lines: Iterable[str], source: Optional[str] = None) -> Dict[Tuple[str, str], str]:
    mapping: Dict[Tuple[str, str], str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split("\t")]
        if len(fields) != 3 or not all(fields):
            raise MalformedInputError("expected head_type, tail_type, relation", source, number)
        mapping[(fields[0], fields[1])] = fields[2]
    if not mapping:
        raise EmptyInputError("Pair-to-relation mapping is empty.")
    return mapping


def path_relations(path: str, mapping: Dict[Tuple[str, str], str], hops: int = 2) -> List[str]:
    types = [t for t in path.strip().split(PATH_SEPARATOR)]
    if len(types) - 1 != hops or not all(types):
        raise DataValidationError(f"Path {path!r} has {len(types) - 1} hops, expected {hops}.")
    relations = []
    for pair in zip(types, types[1:]):
        if pair not in mapping:
            raise UnknownPairError(f"Type pair {pair} has no relation mapping.")
        relations.append(mapping[pair])
    return relations


def metaqa_evidence(record: MetaQARecord, graph: KnowledgeGraph, mapping: Dict[Tuple[str, str], str],
                    hops: int = 2) -> QuestionRecord:
    relations = path_relations(record.path, mapping, hops)
    chains = find_chains(graph, record.source, relations, record.answer)
    if not chains:
        raise MissingEvidenceError(
            f"Question {record.id}: no chain {record.source} -> {' -> '.join(relations)} -> {record.answer}.")
    if len(chains) > 1:
        middles = [chain[2] for chain in chains]
        raise AmbiguousEvidenceError(
            f"Question {record.id}: {len(chains)} intermediate entities fit: {middles}.", candidates=chains)
    return QuestionRecord(id=record.id, question=record.question, source=record.source,
                          relations=relations, answer=record.answer, evidence=chains[0])


def shortest_path_matrix(graph: KnowledgeGraph, nodes: Sequence[str]) -> DistanceMatrix:
    """Undirected hop distances between ``nodes``; ``inf`` where no path exists."""
    nodes = list(nodes)
    if not nodes:
        raise EmptyInputError("shortest_path_matrix needs at least one node.")
    idx = np.array([graph.entity_index(name) for name in nodes], dtype=int)
    d = shortest_path(graph.undirected_csr(), method="D", directed=False, unweighted=True, indices=idx)
    matrix = DistanceMatrix(d=d[:, idx], labels=nodes)
    if not matrix.connected:
        logger.warning("Some of the %d nodes lie in different components.", len(nodes))
    return matrix


def split_questions(records: Sequence, ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1),
                    seed: int = 42) -> Tuple[list, list, list]:
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise DataValidationError(f"Split ratios must be three non-negative numbers, got {ratios}.")
    total = sum(ratios)
    n = len(records)
    n_dev = int(round(n * ratios[1] / total))
    n_test = int(round(n * ratios[2] / total))
    n_train = max(0, n - n_dev - n_test)
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [records[i] for i in order]
    return (shuffled[:n_train], shuffled[n_train:n_train + n_dev],
            shuffled[n_train + n_dev:n_train + n_dev + n_test])
