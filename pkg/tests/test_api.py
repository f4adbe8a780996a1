"""HTTP API: endpoint mapping, error bodies, ingest jobs, uploads."""

import time

import pytest
from fastapi.testclient import TestClient

from visitprep.service.app import create_app
from visitprep.service.config import ServiceConfig

ADMIN = {"Authorization": "Bearer test-admin-token"}


@pytest.fixture
def client(tmp_path, sample_book_dir):
    config = ServiceConfig(
        data_dir=tmp_path / "data",
        stub_mode=True,
        admin_token="test-admin-token",
    )
    app = create_app(config)
    with TestClient(app) as client:
        yield client


def ingest_sample_book(client, sample_book_dir, book_id="sample-guide"):
    response = client.post(
        "/api/admin/books",
        json={"path": str(sample_book_dir), "book_id": book_id},
        headers=ADMIN,
    )
    assert response.status_code == 202, response.text
    job_id = response.json()["job_id"]
    for _ in range(200):
        job = client.get(f"/api/admin/ingest-jobs/{job_id}", headers=ADMIN).json()
        if job["status"] in ("Done", "Failed"):
            return job
        time.sleep(0.02)
    raise AssertionError("ingest job never finished")


def drive_to_questions(client, sample_book_dir):
    ingest_sample_book(client, sample_book_dir)
    session = client.post("/api/sessions").json()
    sid = session["session_id"]
    client.post(f"/api/sessions/{sid}/topics", json={"topic_ids": ["treatment_plan"]})
    client.post(
        f"/api/sessions/{sid}/responses",
        json={"text": "I keep hearing about Alpha Therapy and Beta Procedure."},
    )
    client.post(
        f"/api/sessions/{sid}/responses",
        json={"text": "I am unsure what recovery looks like for each."},
    )
    view = client.post(f"/api/sessions/{sid}/reflection").json()
    for _ in view["reflection_prompts"]:
        client.post(
            f"/api/sessions/{sid}/responses",
            json={"text": "Staying close to family matters most."},
        )
    client.post(f"/api/sessions/{sid}/journey")
    client.post(f"/api/sessions/{sid}/narrative/confirm")
    return sid


class TestSessionEndpoints:
    def test_create_session_contract(self, client):
        response = client.post("/api/sessions")
        assert response.status_code == 201
        body = response.json()
        assert body["stage"] == "TopicSelection"
        assert len(body["topics"]) == 8
        assert body["transcript"]

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/nope").status_code == 404

    def test_topics_validation_422(self, client):
        sid = client.post("/api/sessions").json()["session_id"]
        response = client.post(f"/api/sessions/{sid}/topics", json={"topic_ids": ["bad"]})
        assert response.status_code == 422
        assert response.json()["code"] == "UnknownTopic"

    def test_premature_journey_409(self, client):
        sid = client.post("/api/sessions").json()["session_id"]
        response = client.post(f"/api/sessions/{sid}/journey")
        assert response.status_code == 409
        assert response.json()["code"] == "WrongStage"

    def test_premature_questions_409(self, client):
        sid = client.post("/api/sessions").json()["session_id"]
        response = client.get(f"/api/sessions/{sid}/questions")
        assert response.status_code == 409

    def test_empty_response_422(self, client, sample_book_dir):
        ingest_sample_book(client, sample_book_dir)
        sid = client.post("/api/sessions").json()["session_id"]
        client.post(f"/api/sessions/{sid}/topics", json={"topic_ids": ["treatment_plan"]})
        response = client.post(f"/api/sessions/{sid}/responses", json={"text": "  "})
        assert response.status_code == 422
        assert response.json()["code"] == "EmptyResponse"

    def test_response_without_index_409(self, client):
        sid = client.post("/api/sessions").json()["session_id"]
        client.post(f"/api/sessions/{sid}/topics", json={"topic_ids": ["treatment_plan"]})
        client.post(f"/api/sessions/{sid}/responses", json={"text": "first"})
        response = client.post(f"/api/sessions/{sid}/responses", json={"text": "second"})
        assert response.status_code == 409
        assert response.json()["code"] == "EmptyIndex"

    def test_full_flow_returns_five_and_five(self, client, sample_book_dir):
        sid = drive_to_questions(client, sample_book_dir)
        questions = client.get(f"/api/sessions/{sid}/questions")
        assert questions.status_code == 200
        body = questions.json()
        assert len(body["know_them"]) == 5
        assert len(body["ask_them"]) == 5
        for q in body["know_them"]:
            assert q["answer"] and q["sources"]

    def test_panel_endpoint_shape(self, client, sample_book_dir):
        sid = drive_to_questions(client, sample_book_dir)
        panel = client.get(f"/api/sessions/{sid}/panel").json()
        assert set(panel) >= {"background_summary", "decision_factors", "option_grid"}
        grid = panel["option_grid"]
        assert len(grid["cells"]) == len(grid["options"]) * len(grid["dimensions"])

    def test_session_view_resolves_citations(self, client, sample_book_dir):
        sid = drive_to_questions(client, sample_book_dir)
        view = client.get(f"/api/sessions/{sid}").json()
        cited = {s for f in view["panel"]["decision_factors"] for s in f["sources"]}
        for q in view["questions"]["know_them"]:
            cited.update(q["sources"])
        assert cited
        for segment_id in cited:
            citation = view["citations"][segment_id]
            assert citation["book_id"] == "sample-guide"
            assert citation["page_number"] >= 1

    def test_narrative_edit_fraction(self, client, sample_book_dir):
        ingest_sample_book(client, sample_book_dir)
        sid = client.post("/api/sessions").json()["session_id"]
        client.post(f"/api/sessions/{sid}/topics", json={"topic_ids": ["treatment_plan"]})
        client.post(f"/api/sessions/{sid}/responses", json={"text": "I know about Alpha Therapy."})
        client.post(f"/api/sessions/{sid}/responses", json={"text": "I wonder about costs."})
        view = client.post(f"/api/sessions/{sid}/reflection").json()
        for _ in view["reflection_prompts"]:
            client.post(f"/api/sessions/{sid}/responses", json={"text": "Family matters."})
        view = client.post(f"/api/sessions/{sid}/journey").json()
        original = view["narrative"]["original_text"]
        response = client.put(
            f"/api/sessions/{sid}/narrative",
            json={"edited_text": original + " Also timing."},
        )
        assert response.status_code == 200
        assert response.json()["token_change_fraction"] > 0

    def test_session_survives_restart_via_replay(self, client, sample_book_dir, tmp_path):
        sid = drive_to_questions(client, sample_book_dir)
        before = client.get(f"/api/sessions/{sid}").json()
        runtime = client.app.state.runtime
        runtime["store"]._sessions.clear()  # simulate process restart
        after = client.get(f"/api/sessions/{sid}").json()
        assert after == before


class TestAdminEndpoints:
    def test_admin_token_required(self, client, sample_book_dir):
        response = client.post("/api/admin/books", json={"path": str(sample_book_dir)})
        assert response.status_code == 401

    def test_ingest_job_reaches_done_with_report(self, client, sample_book_dir):
        job = ingest_sample_book(client, sample_book_dir)
        assert job["status"] == "Done"
        assert job["progress"] == 1.0
        assert job["report"]["page_count"] == 8
        assert job["report"]["segment_count"] > 0

    def test_ingest_missing_folder_fails_with_cause(self, client, tmp_path):
        response = client.post(
            "/api/admin/books", json={"path": str(tmp_path / "missing")}, headers=ADMIN
        )
        job_id = response.json()["job_id"]
        for _ in range(100):
            job = client.get(f"/api/admin/ingest-jobs/{job_id}", headers=ADMIN).json()
            if job["status"] in ("Done", "Failed"):
                break
            time.sleep(0.02)
        assert job["status"] == "Failed"
        assert "EmptyFolder" in job["error"]

    def test_multipart_upload(self, client, sample_book_dir):
        files = [
            ("files", (page.name, page.read_bytes(), "text/plain"))
            for page in sorted(sample_book_dir.iterdir())
        ]
        response = client.post(
            "/api/admin/books",
            files=files,
            data={"book_id": "uploaded-guide"},
            headers=ADMIN,
        )
        assert response.status_code == 202, response.text
        job_id = response.json()["job_id"]
        for _ in range(200):
            job = client.get(f"/api/admin/ingest-jobs/{job_id}", headers=ADMIN).json()
            if job["status"] in ("Done", "Failed"):
                break
            time.sleep(0.02)
        assert job["status"] == "Done", job
        assert job["book_id"] == "uploaded-guide"
        assert job["report"]["page_count"] == 8

    def test_unknown_job_404(self, client):
        assert client.get("/api/admin/ingest-jobs/nope", headers=ADMIN).status_code == 404

    def test_healthz(self, client, sample_book_dir):
        assert client.get("/api/healthz").json()["status"] == "ok"
        ingest_sample_book(client, sample_book_dir)
        assert client.get("/api/healthz").json()["indexed_segments"] > 0

    def test_reingest_replaces_book(self, client, sample_book_dir, tmp_path):
        first = ingest_sample_book(client, sample_book_dir)
        segments_before = client.get("/api/healthz").json()["indexed_segments"]
        small = tmp_path / "small-book"
        small.mkdir()
        (small / "1.txt").write_text("One tiny page about Alpha Therapy.", encoding="utf-8")
        job = ingest_sample_book(client, small, book_id="sample-guide")
        assert job["status"] == "Done"
        segments_after = client.get("/api/healthz").json()["indexed_segments"]
        assert segments_after < segments_before
