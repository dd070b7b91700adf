import math

import pytest
from fastapi.testclient import TestClient

from main import app

client = TestClient(app)


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["message"] == "GM Hankel Lab API"


def test_bessel_eval():
    response = client.post("/bessel/eval", json={"alpha": -0.5, "x": math.pi})
    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(-1.0, abs=1e-13)


def test_bessel_eval_rejects_low_order():
    assert client.post("/bessel/eval", json={"alpha": -1.0, "x": 1.0}).status_code == 422


def test_bessel_envelope():
    response = client.post("/bessel/envelope", json={"alpha": 0.0, "x": 1.0, "m": 0})
    assert response.status_code == 200
    body = response.json()
    assert body["lower"] == pytest.approx(0.75)
    assert body["upper"] == pytest.approx(1.0)


def test_bessel_s():
    response = client.get("/bessel/s", params={"alpha": -0.5})
    assert response.status_code == 200
    assert response.json()["S"] == pytest.approx(1.0, abs=1e-9)


def test_gm_verify_with_constant():
    response = client.post("/gm/verify", json={"function": "power_tail(2)", "C": 1.0, "x_grid": [1.0, 4.0, 16.0]})
    assert response.status_code == 200
    body = response.json()
    assert body["lambda"] == 2.0
    assert all(point["passed"] for point in body["checked_points"])


def test_gm_verify_unknown_function():
    assert client.post("/gm/verify", json={"function": "nope", "x_grid": [1.0]}).status_code == 404


def test_gm_dyadic():
    response = client.post("/gm/dyadic", json={"function": "pure_power(3)", "n_min": 1, "n_max": 3})
    assert response.status_code == 200
    assert [row["good"] for row in response.json()] == [False, False, False]


def test_gm_dyadic_rejects_sequence():
    assert client.post("/gm/dyadic", json={"function": "inverse_square"}).status_code == 422


def test_transforms_partial():
    response = client.post("/transforms/partial", json={"function": "trunc_exp", "u": 0.0, "N": 1.0})
    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(1.0 - math.exp(-1.0), abs=1e-10)


def test_transforms_limit_with_closed_form():
    response = client.post("/transforms/limit", json={"function": "trunc_exp", "u": 2.0})
    assert response.status_code == 200
    body = response.json()
    assert body["value"] == pytest.approx(body["closed_form"], abs=1e-9)


def test_transforms_limit_divergence():
    response = client.post("/transforms/limit", json={"function": "cos_over_sqrt", "u": 1.0})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "DivergenceError"


def test_transforms_bound():
    response = client.post(
        "/transforms/bound",
        json={"function": "trunc_exp", "N": 1.0, "C": 2.0, "u_min": 0.1, "u_max": 10.0, "u_per_decade": 2},
    )
    assert response.status_code == 200
    body = response.json()
    assert set(body) == {"statement", "proof"}
    assert body["statement"]["passed"] in (True, False)
    assert body["statement"]["rhs"] >= body["statement"]["lhs"]


def test_series_partial_sum():
    response = client.post("/series/partial-sum", json={"sequence": "square_wave", "N": 1001, "x": math.pi / 2})
    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(0.5, abs=1e-12)


def test_series_rejects_function():
    assert client.post("/series/partial-sum", json={"sequence": "trunc_exp", "N": 3, "x": 0.0}).status_code == 422


def test_series_dirichlet():
    response = client.get("/series/dirichlet", params={"N": 7, "x": 0.0})
    assert response.json()["value"] == pytest.approx(15.0)


def test_gallery_listing():
    response = client.get("/gallery/")
    assert response.status_code == 200
    names = [entry["name"] for entry in response.json()]
    assert "cos_over_sqrt" in names


def test_gallery_entry():
    response = client.get("/gallery/cos_over_sqrt")
    assert response.status_code == 200
    body = response.json()
    assert body["gm_status"]["kind"] == "not-GM"
    assert body["closed_form_alpha"] == -0.5


def test_gallery_unknown_entry():
    assert client.get("/gallery/nope").status_code == 404


def test_reports_listing_and_reading(report_dir):
    (report_dir / "run.csv").write_text("# generated_at=x\na,b\n1,2\n", encoding="utf-8")
    (report_dir / "notes.txt").write_text("ignored", encoding="utf-8")
    listing = client.get("/reports")
    assert listing.status_code == 200
    assert [item["name"] for item in listing.json()] == ["run.csv"]
    response = client.get("/reports/run.csv")
    assert response.status_code == 200
    assert response.text.endswith("1,2\n")


def test_reports_missing_and_traversal(report_dir):
    assert client.get("/reports/missing.csv").status_code == 404
    assert client.get("/reports/notes.txt").status_code == 404
