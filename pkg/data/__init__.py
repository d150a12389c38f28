import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Iterable, Iterator, List, Tuple, Type, TypeVar

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from core.exceptions import HyperHopException, MalformedInputError, RecordNotFoundError

load_dotenv()

DATA_DIR = Path(__file__).resolve().parent
PAIR_MAPPING_PATH = Path(os.getenv("HYPERHOP_PAIR_MAPPING", DATA_DIR / "metaqa_pair_relations.tsv"))

M = TypeVar("M", bound=BaseModel)

# Create a thread-local storage
local_storage = threading.local()


class OutputContext:
    """Collects output files in temporaries and renames them into place on commit."""

    def __init__(self):
        self._pending: List[Tuple[str, Path]] = []

    def __enter__(self):
        self._pending = []
        local_storage.output_context = self
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        try:
            if exc_type is not None:
                self.rollback_transaction()
            else:
                self.commit_transaction()
        finally:
            del local_storage.output_context

    def open(self, path, newline: str = "\n"):
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        self._pending.append((tmp, target))
        return os.fdopen(fd, "w", encoding="utf-8", newline=newline)

    def write_text(self, path, text: str) -> None:
        with self.open(path) as handle:
            handle.write(text)

    def commit_transaction(self):
        pending, self._pending = self._pending, []
        for tmp, target in pending:
            os.replace(tmp, target)

    def rollback_transaction(self):
        pending, self._pending = self._pending, []
        for tmp, _ in pending:
            try:
                os.remove(tmp)
            except FileNotFoundError:
                pass


def get_current_output_context() -> OutputContext:
    context = getattr(local_storage, "output_context", None)
    if context is None:
        raise HyperHopException("No output context is active.")
    return context


def read_lines(path) -> List[str]:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.readlines()
    except FileNotFoundError:
        raise RecordNotFoundError(f"File {path} does not exist.") from None
    except UnicodeDecodeError as e:
        raise MalformedInputError(f"not UTF-8 text ({e.reason})", str(path)) from None


def iter_jsonl(lines: Iterable[str], source: str = None) -> Iterator[Tuple[int, dict]]:
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            yield number, json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedInputError(f"invalid JSON: {e.msg}", source, number) from None


def parse_jsonl(lines: Iterable[str], model: Type[M], source: str = None) -> List[M]:
    records = []
    for number, row in iter_jsonl(lines, source):
        try:
            records.append(model.model_validate(row))
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(part) for part in first["loc"]) or model.__name__
            raise MalformedInputError(f"{where}: {first['msg']}", source, number) from None
        except HyperHopException as e:
            raise MalformedInputError(e.message, source, number) from None
    return records


def dumps(payload) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def dumps_line(payload) -> str:
    return json.dumps(payload, ensure_ascii=False) + "\n"


def write_json(path, payload) -> None:
    get_current_output_context().write_text(path, dumps(payload))


def write_jsonl(path, rows: Iterable) -> None:
    with get_current_output_context().open(path) as handle:
        for row in rows:
            if isinstance(row, BaseModel):
                row = row.model_dump(mode="json")
            handle.write(dumps_line(row))
