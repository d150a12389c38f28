from pathlib import Path
from typing import Iterable, List, Optional

from core.exceptions import MalformedInputError
from core.kg import TRIPLE_FORMATS, load_triples
from core.models import HoppingExample, Triple, TripleBatch, Walk
from data import get_current_output_context, iter_jsonl, read_lines, write_jsonl


def guess_triple_format(path, fmt: Optional[str] = None) -> str:
    if fmt and fmt != "auto":
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json"):
        return "jsonl"
    if suffix == ".txt":
        return "pipe"
    return "tsv"


class GraphRepositoryInterface:

    def load_triples(self, path, fmt: Optional[str] = None, strict: bool = True) -> TripleBatch:
        # Parse a triple file into deduplicated triples
        pass

    def load_walks(self, path) -> List[Walk]:
        # Read walks from JSON-lines
        pass

    def save_walks(self, path, walks: Iterable[Walk]) -> None:
        # Write walks as JSON-lines
        pass

    def save_examples(self, path, examples: Iterable[HoppingExample]) -> None:
        # Write hopping examples as JSON-lines
        pass

    def save_triples(self, path, triples: Iterable[Triple]) -> None:
        # Write triples as head/relation/tail TSV
        pass


class FileGraphRepository(GraphRepositoryInterface):

    def load_triples(self, path, fmt: Optional[str] = None, strict: bool = True) -> TripleBatch:
        fmt = guess_triple_format(path, fmt)
        if fmt not in TRIPLE_FORMATS:
            raise MalformedInputError(f"unknown triple format {fmt!r}", str(path))
        return load_triples(read_lines(path), fmt=fmt, strict=strict, source=str(path))

    def load_walks(self, path) -> List[Walk]:
        walks = []
        for number, row in iter_jsonl(read_lines(path), str(path)):
            # a walk line is a bare list, {"walk": [...]} or a hopping pair {"target": [...]}
            if isinstance(row, dict):
                row = row.get("walk", row.get("target"))
            if not isinstance(row, list) or not row or len(row) % 2 == 0 \
                    or not all(isinstance(item, str) for item in row):
                raise MalformedInputError("expected an alternating entity/relation list", str(path), number)
            walks.append(Walk(sequence=row))
        return walks

    def save_walks(self, path, walks: Iterable[Walk]) -> None:
        write_jsonl(path, ({"walk": list(w.sequence), "short": w.short} for w in walks))

    def save_examples(self, path, examples: Iterable[HoppingExample]) -> None:
        write_jsonl(path, examples)

    def save_triples(self, path, triples: Iterable[Triple]) -> None:
        with get_current_output_context().open(path) as handle:
            for t in triples:
                handle.write(f"{t.head}\t{t.relation}\t{t.tail}\n")
