import json
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from core.analysis import load_embeddings
from core.exceptions import HyperHopException, MalformedInputError
from core.hlayer import PoincareLinearParams
from core.models import EmbeddingTable
from data import read_lines, write_json


def guess_embedding_format(path, fmt: Optional[str] = None) -> str:
    if fmt and fmt not in ("auto", "tsv", "pipe"):
        return fmt
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json") else "text"


class EmbeddingRepositoryInterface:

    def load_table(self, path, fmt: Optional[str] = None) -> EmbeddingTable:
        pass

    def load_params(self, path) -> PoincareLinearParams:
        pass

    def save_params(self, path, params: PoincareLinearParams) -> None:
        pass


class FileEmbeddingRepository(EmbeddingRepositoryInterface):

    def load_table(self, path, fmt: Optional[str] = None) -> EmbeddingTable:
        return load_embeddings(read_lines(path), guess_embedding_format(path, fmt), str(path))

    def load_params(self, path) -> PoincareLinearParams:
        text = "".join(read_lines(path))
        try:
            return PoincareLinearParams.from_record(json.loads(text))
        except json.JSONDecodeError as e:
            raise MalformedInputError(f"invalid JSON: {e.msg}", str(path), e.lineno) from None
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise MalformedInputError(f"not a layer parameter record ({e})", str(path)) from None
        except HyperHopException as e:
            raise MalformedInputError(e.message, str(path)) from None

    def save_params(self, path, params: PoincareLinearParams) -> None:
        write_json(path, params.to_record())
