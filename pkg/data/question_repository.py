from typing import Dict, Iterable, List, Optional, Tuple

from core.kg import parse_pair_mapping
from core.models import MetaQARecord, PathPairs, PredictionRecord, QuestionRecord
from data import PAIR_MAPPING_PATH, parse_jsonl, read_lines, write_jsonl


class QuestionRepositoryInterface:

    def load_questions(self, path) -> List[QuestionRecord]:
        pass

    def load_metaqa(self, path) -> List[MetaQARecord]:
        pass

    def load_predictions(self, path) -> List[PredictionRecord]:
        pass

    def load_pairs(self, path) -> List[PathPairs]:
        pass

    def load_pair_mapping(self, path=None) -> Dict[Tuple[str, str], str]:
        pass

    def save_records(self, path, records: Iterable) -> None:
        pass


class FileQuestionRepository(QuestionRepositoryInterface):

    def load_questions(self, path) -> List[QuestionRecord]:
        return parse_jsonl(read_lines(path), QuestionRecord, str(path))

    def load_metaqa(self, path) -> List[MetaQARecord]:
        return parse_jsonl(read_lines(path), MetaQARecord, str(path))

    def load_predictions(self, path) -> List[PredictionRecord]:
        return parse_jsonl(read_lines(path), PredictionRecord, str(path))

    def load_pairs(self, path) -> List[PathPairs]:
        return parse_jsonl(read_lines(path), PathPairs, str(path))

    def load_pair_mapping(self, path: Optional[str] = None) -> Dict[Tuple[str, str], str]:
        path = path or PAIR_MAPPING_PATH
        return parse_pair_mapping(read_lines(path), str(path))

    def save_records(self, path, records: Iterable) -> None:
        write_jsonl(path, records)
