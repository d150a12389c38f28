from fastapi import APIRouter, Depends

from core.kg import branching_share
from core.models import DeltaEstimate, GraphStats, HoppingBatch, Walk
from service.delta_service import DeltaServiceInterface
from service.graph_service import GraphServiceInterface
from web.dependencies import get_delta_service, get_graph_service
from web.schemas import DegreeResponse, DegreeRow, DeltaRequest, TriplesRequest, WalksRequest

router = APIRouter()


@router.post("/stats", response_model=GraphStats, summary="Node, edge and relation counts of a triple set.")
def graph_stats(request: TriplesRequest, service: GraphServiceInterface = Depends(get_graph_service)):
    graph = service.build_graph(request.triples, request.add_inverse_relations)
    return service.graph_stats(graph)


@router.post("/degree", response_model=DegreeResponse, summary="Out-degree distribution.")
def degree(request: TriplesRequest, service: GraphServiceInterface = Depends(get_graph_service)):
    histogram = service.degree_histogram(service.build_graph(request.triples, request.add_inverse_relations))
    return DegreeResponse(rows=[DegreeRow(out_degree=k, proportion=v) for k, v in histogram.items()],
                          branching_share=branching_share(histogram))


@router.post("/delta", response_model=DeltaEstimate, summary="Relative delta-hyperbolicity of the graph metric.")
def delta(request: DeltaRequest, graphs: GraphServiceInterface = Depends(get_graph_service),
          service: DeltaServiceInterface = Depends(get_delta_service)):
    graph = graphs.build_graph(request.triples, request.add_inverse_relations)
    return service.estimate(service.graph_source(graph), request.sample_size, request.repeats, request.seed)


@router.post("/walks", response_model=HoppingBatch, summary="Seeded random walks as hopping examples.")
def walks(request: WalksRequest, service: GraphServiceInterface = Depends(get_graph_service)):
    graph = service.build_graph(request.triples, request.add_inverse_relations)
    heldout = [Walk(sequence=w) for w in request.heldout]
    _, batch = service.hopping_examples(graph, request.start, request.hops, request.walks_per_start,
                                        request.seed, heldout, request.exclusion)
    return batch
