import pytest
from fastapi.testclient import TestClient

from conftest import SAMPLE_EDGES
from main import app

client = TestClient(app)

SAMPLE_TRIPLES = [{"head": h, "relation": r, "tail": t} for h, r, t in SAMPLE_EDGES]


def cycle_triples(n):
    return [{"head": f"v{i}", "relation": "next", "tail": f"v{(i + 1) % n}"} for i in range(n)]


def test_stats():
    response = client.post("/graph/stats", json={"triples": SAMPLE_TRIPLES})
    assert response.status_code == 200
    assert response.json() == {"nodes": 6, "edges": 5, "relations": 5}


def test_degree():
    response = client.post("/graph/degree", json={"triples": SAMPLE_TRIPLES})
    assert response.status_code == 200
    body = response.json()
    assert [row["out_degree"] for row in body["rows"]] == [0, 1, 2]
    assert body["branching_share"] == pytest.approx(1 / 3)


def test_degree_of_empty_graph_is_bad_request():
    response = client.post("/graph/degree", json={"triples": []})
    assert response.status_code == 400
    assert response.json()["error"] == "EmptyInputError"


def test_delta_on_cycle():
    response = client.post("/graph/delta", json={"triples": cycle_triples(12), "sample_size": 12, "repeats": 2,
                                                 "seed": 5})
    assert response.status_code == 200
    body = response.json()
    assert body["seed"] == 5 and len(body["delta_rel_values"]) == 2
    assert body["curvature"] == pytest.approx((0.144 / body["mean"]) ** 2)


def test_delta_rejects_small_samples():
    response = client.post("/graph/delta", json={"triples": cycle_triples(12), "sample_size": 2})
    assert response.status_code == 422


def test_walks():
    response = client.post("/graph/walks", json={"triples": SAMPLE_TRIPLES, "start": ["Cloudburst"],
                                                 "walks_per_start": 4, "seed": 1})
    assert response.status_code == 200
    body = response.json()
    assert len(body["examples"]) == 4
    assert all(example["input"][0] == "Cloudburst" for example in body["examples"])


def test_walks_with_unknown_start_is_not_found():
    response = client.post("/graph/walks", json={"triples": SAMPLE_TRIPLES, "start": ["Nobody"]})
    assert response.status_code == 404
    assert response.json()["error"] == "MissingNameError"


def test_exact_match():
    response = client.post("/analysis/em", json=[{"id": 1, "prediction": "the Greek", "gold": "Greek"},
                                                 {"id": 2, "prediction": "Latin", "gold": "Greek"}])
    assert response.status_code == 200
    assert response.json() == {"em": 50.0, "n": 2}


def test_curvature():
    response = client.get("/analysis/curvature", params={"delta_rel": 0.25})
    assert response.status_code == 200
    assert response.json()["curvature"] == pytest.approx(0.331776)
    response = client.get("/analysis/curvature", params={"delta_rel": 0})
    assert response.status_code == 422
    assert response.json()["error"] == "CurvatureUndefinedError"


def test_layer_forward():
    response = client.post("/layer/forward", json={"vectors": [[0.0], [0.3]], "Z": [[1.0]], "r": [-0.25],
                                                   "c": 1.0})
    assert response.status_code == 200
    outputs = response.json()["outputs"]
    # the ball output tanh(1/2) is mapped back through log0
    assert outputs[0][0] == pytest.approx(0.5)
    assert len(outputs) == 2


def test_layer_dimension_mismatch():
    response = client.post("/layer/forward", json={"vectors": [[0.0, 1.0]], "Z": [[1.0]], "r": [0.0], "c": 1.0})
    assert response.status_code == 400
    assert response.json()["error"] == "DimensionMismatchError"
