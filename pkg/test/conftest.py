import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from core.kg import build_graph
from core.models import Triple

SAMPLE_EDGES = [
    ("Cloudburst", "composer", "Eric Whitacre"),
    ("Cloudburst", "director", "Francis Searle"),
    ("Eric Whitacre", "country of citizenship", "American"),
    ("Francis Searle", "date of birth", "14 March 1909"),
    ("Francis Searle", "date of death", "31 July 2002"),
]

METAQA_KB = [
    "My Big Fat Greek Wedding|directed_by|Joel Zwick",
    "My Big Fat Greek Wedding|in_language|Greek",
    "Fat Albert|directed_by|Joel Zwick",
    "Fat Albert|in_language|English",
    "Fat Albert|release_year|2004",
]

TABLE7 = {
    ("movie", "language"): "in_language",
    ("movie", "year"): "release_year",
    ("movie", "writer"): "written_by",
    ("movie", "director"): "directed_by",
    ("movie", "genre"): "has_genre",
    ("movie", "actor"): "starred_actors",
    ("language", "movie"): "in_language_reversed",
    ("year", "movie"): "release_year_reversed",
    ("writer", "movie"): "written_by_reversed",
    ("director", "movie"): "directed_by_reversed",
    ("genre", "movie"): "has_genre_reversed",
    ("actor", "movie"): "starred_actors_reversed",
}


@pytest.fixture
def sample_triples():
    return [Triple(head=h, relation=r, tail=t) for h, r, t in SAMPLE_EDGES]


@pytest.fixture
def sample_graph(sample_triples):
    return build_graph(sample_triples)


@pytest.fixture
def sample_tsv(tmp_path):
    path = tmp_path / "sample.tsv"
    path.write_text("".join(f"{h}\t{r}\t{t}\n" for h, r, t in SAMPLE_EDGES), encoding="utf-8")
    return path


@pytest.fixture
def metaqa_kb(tmp_path):
    path = tmp_path / "kb.txt"
    path.write_text("\n".join(METAQA_KB) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def table7():
    return dict(TABLE7)


def _tree_metric(n: int, rng: np.random.Generator, weighted: bool) -> np.ndarray:
    parents = [int(rng.integers(i)) for i in range(1, n)]
    weights = rng.uniform(0.1, 5.0, size=n - 1) if weighted else np.ones(n - 1)
    adjacency = csr_matrix((weights, (np.arange(1, n), parents)), shape=(n, n))
    return shortest_path(adjacency, directed=False)


def _euclidean_metric(n: int, rng: np.random.Generator, dim: int = 3) -> np.ndarray:
    points = rng.normal(size=(n, dim))
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    return (d + d.T) / 2


@pytest.fixture
def tree_metric():
    return _tree_metric


@pytest.fixture
def euclidean_metric():
    return _euclidean_metric
