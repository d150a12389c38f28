import json

import numpy as np
import pytest

from core.config import Settings, resolve_workers
from core.exceptions import HyperHopException, MalformedInputError, RecordNotFoundError
from core.hlayer import init_params
from core.models import QuestionRecord, Walk
from data import OutputContext, get_current_output_context, parse_jsonl, read_lines, write_json, write_jsonl
from data.embedding_repository import FileEmbeddingRepository, guess_embedding_format
from data.graph_repository import FileGraphRepository, guess_triple_format
from data.question_repository import FileQuestionRepository


def test_output_context_commits_every_file(tmp_path):
    with OutputContext():
        write_json(tmp_path / "a.json", {"seed": 1})
        write_jsonl(tmp_path / "sub" / "b.jsonl", [{"x": 1}, QuestionRecord(id=2)])
        assert not (tmp_path / "a.json").exists()
    assert json.loads((tmp_path / "a.json").read_text()) == {"seed": 1}
    lines = (tmp_path / "sub" / "b.jsonl").read_text().splitlines()
    assert json.loads(lines[1])["id"] == "2"


def test_output_context_rolls_back_on_error(tmp_path):
    with pytest.raises(RuntimeError):
        with OutputContext():
            write_json(tmp_path / "a.json", {"seed": 1})
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_output_requires_context(tmp_path):
    with pytest.raises(HyperHopException):
        get_current_output_context()
    with pytest.raises(HyperHopException):
        write_json(tmp_path / "a.json", {})


def test_read_lines_errors(tmp_path):
    with pytest.raises(RecordNotFoundError):
        read_lines(tmp_path / "missing.tsv")
    bad = tmp_path / "bad.tsv"
    bad.write_bytes(b"\xff\xfe\x00broken")
    with pytest.raises(MalformedInputError):
        read_lines(bad)


def test_parse_jsonl_locates_bad_records():
    lines = ['{"id": 1}\n', '\n', '{"question": "no id"}\n']
    with pytest.raises(MalformedInputError, match="q.jsonl:3:"):
        parse_jsonl(lines, QuestionRecord, "q.jsonl")
    with pytest.raises(MalformedInputError, match="q.jsonl:1:"):
        parse_jsonl(["{not json"], QuestionRecord, "q.jsonl")


def test_format_guessing():
    assert guess_triple_format("kb.txt") == "pipe"
    assert guess_triple_format("kb.jsonl") == "jsonl"
    assert guess_triple_format("kb.tsv") == "tsv"
    assert guess_triple_format("kb.txt", "tsv") == "tsv"
    assert guess_embedding_format("emb.txt") == "text"
    assert guess_embedding_format("emb.jsonl", "auto") == "jsonl"


def test_graph_repository_reads_triples(sample_tsv, metaqa_kb):
    repository = FileGraphRepository()
    assert len(repository.load_triples(sample_tsv).triples) == 5
    assert len(repository.load_triples(metaqa_kb).triples) == 5


def test_graph_repository_walks(tmp_path):
    repository = FileGraphRepository()
    path = tmp_path / "walks.jsonl"
    path.write_text('["a", "r", "b"]\n{"walk": ["c"]}\n{"input": ["a", "r"], "target": ["a", "r", "b"]}\n')
    assert [w.sequence for w in repository.load_walks(path)] == [["a", "r", "b"], ["c"], ["a", "r", "b"]]
    path.write_text('["a", "r"]\n')
    with pytest.raises(MalformedInputError):
        repository.load_walks(path)
    saved = tmp_path / "saved.jsonl"
    with OutputContext():
        repository.save_walks(saved, [Walk(sequence=["a", "r", "b"]), Walk(sequence=["c"], short=True)])
    assert json.loads(saved.read_text().splitlines()[1]) == {"walk": ["c"], "short": True}
    assert [w.sequence for w in repository.load_walks(saved)] == [["a", "r", "b"], ["c"]]


def test_question_repository(tmp_path):
    repository = FileQuestionRepository()
    assert len(repository.load_pair_mapping()) == 12
    path = tmp_path / "metaqa.jsonl"
    path.write_text(json.dumps({"id": 7, "question": "which films did [Joel Zwick] direct",
                                "path": "director_to_movie", "answer": "Fat Albert"}) + "\n")
    [record] = repository.load_metaqa(path)
    assert record.id == "7" and record.source == "Joel Zwick"
    path.write_text(json.dumps({"id": 8, "question": "no entity", "path": "director_to_movie", "answer": "x"}) + "\n")
    with pytest.raises(MalformedInputError, match="metaqa.jsonl:1:"):
        repository.load_metaqa(path)


def test_embedding_repository_params(tmp_path):
    repository = FileEmbeddingRepository()
    params = init_params(2, 3, 0.44, np.random.default_rng(0))
    path = tmp_path / "params.json"
    with OutputContext():
        repository.save_params(path, params)
    loaded = repository.load_params(path)
    assert np.allclose(loaded.Z, params.Z) and np.allclose(loaded.r, params.r) and loaded.c == params.c
    path.write_text("{}")
    with pytest.raises(MalformedInputError):
        repository.load_params(path)
    path.write_text("{oops")
    with pytest.raises(MalformedInputError):
        repository.load_params(path)


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("HYPERHOP_SEED", "7")
    monkeypatch.setenv("HYPERHOP_CURVATURE", "0.33")
    monkeypatch.setenv("HYPERHOP_STRICT", "yes")
    loaded = Settings.from_env()
    assert loaded.seed == 7 and loaded.curvature == 0.33 and loaded.strict
    assert loaded.sample_size == 1500 and loaded.repeats == 5 and loaded.separator == "; "


def test_resolve_workers():
    assert resolve_workers(3) == 3
    assert resolve_workers(0) >= 1
