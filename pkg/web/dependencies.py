from fastapi import Depends

from data.embedding_repository import EmbeddingRepositoryInterface, FileEmbeddingRepository
from data.graph_repository import FileGraphRepository, GraphRepositoryInterface
from data.question_repository import FileQuestionRepository, QuestionRepositoryInterface
from service.analysis_service import AnalysisService, AnalysisServiceInterface
from service.delta_service import DeltaService, DeltaServiceInterface
from service.graph_service import GraphService, GraphServiceInterface
from service.layer_service import LayerService, LayerServiceInterface


def get_graph_repository() -> GraphRepositoryInterface:
    return FileGraphRepository()


def get_question_repository() -> QuestionRepositoryInterface:
    return FileQuestionRepository()


def get_embedding_repository() -> EmbeddingRepositoryInterface:
    return FileEmbeddingRepository()


def get_graph_service(repo: GraphRepositoryInterface = Depends(get_graph_repository),
                      questions: QuestionRepositoryInterface = Depends(get_question_repository)) -> GraphServiceInterface:
    return GraphService(repo, questions)


def get_delta_service() -> DeltaServiceInterface:
    return DeltaService()


def get_analysis_service() -> AnalysisServiceInterface:
    return AnalysisService()


def get_layer_service(repo: EmbeddingRepositoryInterface = Depends(get_embedding_repository)) -> LayerServiceInterface:
    return LayerService(repo)
