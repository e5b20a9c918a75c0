import pytest

from app import app


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    data = response.get_json()
    assert data["status"] == "healthy"
    assert "example1_order3" in data["experiments"]


def test_integrate(client):
    response = client.post("/api/integrate", json={"kernel": "power-singular", "alpha": 0.5,
                                                   "order": 3, "N": 20, "f": "t"})
    data = response.get_json()
    assert response.status_code == 200
    assert data["success"] is True
    assert data["error"] < 1e-12


def test_weights(client):
    response = client.post("/api/weights", json={"alpha": 0.5, "order": "alpha", "N": 10, "raw": True})
    data = response.get_json()
    assert data["success"] is True
    assert len(data["w_tilde"]) == 11
    assert data["consistency"]["consistent"] is True
    assert len(data["raw"]) == 10


def test_stability(client):
    data = client.post("/api/stability", json={"order": 4}).get_json()
    assert data["margin"]["minimum"] == pytest.approx(-0.31554, abs=1e-4)
    assert "audit" not in data

    data = client.post("/api/stability", json={"order": 3, "kernel": "const", "alpha": 0.5,
                                                   "N": 8, "lam": 0.5}).get_json()
    assert data["audit"]["violations"] == []
    assert "max_root_modulus" in data["schur"]


def test_stability_schur_unstable_recurrence(client):
    data = client.post("/api/stability", json={"order": 2, "kernel": "const", "N": 10, "lam": 2.0}).get_json()
    assert "margin" not in data
    assert data["schur"]["is_schur_by_bound"] is False
    assert data["schur"]["max_root_modulus"] > 1.0


def test_solve(client):
    data = client.post("/api/solve", json={"example": 2, "alpha": 0.5, "order": 3, "N": 20}).get_json()
    assert data["success"] is True
    assert len(data["u"]) == 21


def test_solve_rejects_bad_problem(client):
    response = client.post("/api/solve", json={"example": "custom", "N": 10})
    assert response.status_code == 400
    data = response.get_json()
    assert data["success"] is False
    assert data["type"] == "InvalidArgumentError"


def test_mesh_size_limit(client):
    response = client.post("/api/integrate", json={"N": 10 ** 6})
    assert response.status_code == 400


def test_converge_inline_spec(client):
    spec = {"name": "mini", "example": 1, "order": 2, "alphas": [0.5], "ladder": [10, 20]}
    data = client.post("/api/converge", json={"spec": spec}).get_json()
    assert data["success"] is True
    assert data["mismatches"] == []
    assert [row["N"] for row in data["reports"][0]["rows"]] == [10, 20]


def test_converge_stored_experiment_with_ladder(client):
    data = client.post("/api/converge", json={"experiment": "example3_alpha", "ladder": [10]}).get_json()
    assert data["reference_only"] is True
    assert len(data["reports"]) == 5


def test_converge_unknown_experiment(client):
    response = client.post("/api/converge", json={"experiment": "nope"})
    assert response.status_code == 404
    assert response.get_json()["success"] is False


def test_unknown_route(client):
    response = client.get("/api/nothing")
    assert response.status_code == 404
