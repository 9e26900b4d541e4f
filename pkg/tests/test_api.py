"""HTTP API over a completed run directory."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from scitech.api import TABLE_KEYWORDS_PER_LABEL, create_app
from scitech.errors import ScitechError
from scitech.keywords import LABELS


@pytest.fixture()
def client(fixture_run_copy):
    app = create_app(fixture_run_copy.run_dir)
    with TestClient(app) as c:
        c.run_dir = fixture_run_copy.run_dir
        yield c


def wait_for_job(client, job_id, timeout_s=120.0):
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        job = client.get(f"/api/v1/jobs/{job_id}").json()
        if job["state"] in ("completed", "failed"):
            return job
        time.sleep(0.2)
    raise AssertionError(f"job {job_id} did not finish within {timeout_s}s")


class TestPreconditions:
    def test_unservable_directory(self, tmp_path):
        with pytest.raises(ScitechError, match="not servable"):
            create_app(tmp_path)


class TestTopics:
    def test_listing_sorted_and_truncated(self, client):
        topics = client.get("/api/v1/topics").json()
        assert len(topics) >= 3
        ids = [t["topic_id"] for t in topics]
        assert ids == sorted(ids)
        for t in topics:
            assert set(t["keywords"]) == set(LABELS)
            for label in LABELS:
                assert len(t["keywords"][label]) <= TABLE_KEYWORDS_PER_LABEL
            assert t["selected"] is False
            assert t["note"] == ""
            assert t["size"] > 0
            assert t["yearly_counts"]

    def test_detail_has_full_keyword_lists(self, client):
        table = client.get("/api/v1/topics").json()[0]
        detail = client.get(f"/api/v1/topics/{table['topic_id']}").json()
        assert detail["topic_id"] == table["topic_id"]
        for label in LABELS:
            assert len(detail["keywords"][label]) >= len(table["keywords"][label])

    def test_unknown_topic(self, client):
        assert client.get("/api/v1/topics/999").status_code == 404


class TestSelection:
    def test_patch_and_persist(self, client):
        r = client.patch("/api/v1/topics/0/selection", json={"selected": True})
        assert r.status_code == 200
        body = r.json()
        assert body["selected"] is True
        assert body["updated_at"] is not None

        r = client.patch("/api/v1/topics/0/selection", json={"note": "keep this"})
        assert r.json()["note"] == "keep this"
        assert r.json()["selected"] is True  # note update preserves the flag

        stored = json.loads((client.run_dir / "selection.json").read_text())
        assert stored["0"]["selected"] is True
        assert stored["0"]["note"] == "keep this"

        # a fresh app instance over the same directory sees the state
        reopened = TestClient(create_app(client.run_dir))
        topics = {t["topic_id"]: t for t in reopened.get("/api/v1/topics").json()}
        assert topics[0]["selected"] is True
        assert topics[0]["note"] == "keep this"

    def test_empty_patch_rejected(self, client):
        r = client.patch("/api/v1/topics/0/selection", json={})
        assert r.status_code == 400

    def test_unknown_topic_404(self, client):
        r = client.patch("/api/v1/topics/999/selection", json={"selected": True})
        assert r.status_code == 404

    def test_malformed_body_400(self, client):
        r = client.patch("/api/v1/topics/0/selection", json={"selected": "banana"})
        assert r.status_code == 400
        assert r.json()["error"] == "malformed request"


class TestDendrogram:
    def test_served(self, client):
        r = client.get("/api/v1/dendrogram")
        assert r.status_code == 200
        merges = r.json()["merges"]
        assert isinstance(merges, list)
        for m in merges:
            assert set(m) == {"node_a", "node_b", "height", "new_node"}


class TestSearchJobs:
    def test_requires_selection_or_topic_ids(self, client):
        r = client.post("/api/v1/search/run", json={})
        assert r.status_code == 400
        assert "select" in r.json()["detail"]

    def test_unknown_topic(self, client):
        r = client.post("/api/v1/search/run", json={"topic_ids": [999]})
        assert r.status_code == 404

    def test_bad_k(self, client):
        r = client.post("/api/v1/search/run", json={"topic_ids": [0], "k": 0})
        assert r.status_code == 400

    def test_unknown_job(self, client):
        assert client.get("/api/v1/jobs/deadbeef").status_code == 404

    def test_job_lifecycle(self, client):
        r = client.post("/api/v1/search/run", json={"topic_ids": [0], "k": 20})
        assert r.status_code == 200
        job_id = r.json()["job_id"]
        job = wait_for_job(client, job_id)
        assert job["state"] == "completed", job["error"]
        assert job["progress"] == 1.0
        assert job["topic_ids"] == [0]
        assert job["counts"]["topics"] == 1
        assert job["counts"]["queries_executed"] > 0
        assert job["counts"]["matches"] > 0
        assert job["started_at"] is not None and job["finished_at"] is not None

        # the patents table reflects the fresh matches
        patents = client.get("/api/v1/topics/0/patents").json()
        assert patents["total"] == job["counts"]["matches"]

    def test_selection_drives_default_job(self, client):
        client.patch("/api/v1/topics/1/selection", json={"selected": True})
        r = client.post("/api/v1/search/run", json={})
        job = wait_for_job(client, r.json()["job_id"])
        assert job["state"] == "completed", job["error"]
        assert job["topic_ids"] == [1]


class TestPatents:
    def test_pagination(self, client):
        full = client.get("/api/v1/topics/0/patents", params={"limit": 10000}).json()
        assert full["total"] == len(full["items"])
        assert full["total"] > 0
        page = client.get(
            "/api/v1/topics/0/patents", params={"limit": 5, "offset": 5}
        ).json()
        assert page["total"] == full["total"]
        assert page["items"] == full["items"][5:10]
        for item in full["items"]:
            assert set(item) == {"patent_id", "distance", "hit_count"}

    def test_max_distance_filter(self, client):
        all_rows = client.get("/api/v1/topics/0/patents").json()
        none = client.get(
            "/api/v1/topics/0/patents", params={"max_distance": 0}
        ).json()
        assert none["total"] == 0
        assert all_rows["total"] > 0

    def test_negative_paging_rejected(self, client):
        r = client.get("/api/v1/topics/0/patents", params={"limit": -1})
        assert r.status_code == 400


class TestAnalytics:
    @pytest.mark.parametrize(
        "table", ["by-year", "by-country", "by-field", "by-topic"]
    )
    def test_tables_served(self, client, table):
        r = client.get(f"/api/v1/analytics/{table}")
        assert r.status_code == 200
        rows = r.json()
        assert isinstance(rows, list) and rows
        assert isinstance(rows[0], dict)

    def test_distributions_and_network(self, client):
        dist = client.get("/api/v1/analytics/distance-by-year").json()
        assert all("bins" in d for d in dist)
        net = client.get("/api/v1/analytics/relatedness").json()
        assert set(net) == {"n_observations", "nodes", "edges"}

    def test_unknown_table(self, client):
        r = client.get("/api/v1/analytics/by-moon-phase")
        assert r.status_code == 404
        assert "by-year" in r.json()["detail"]


class TestStaticUi:
    def test_bundle_mounted_when_present(self, fixture_run_copy, tmp_path, monkeypatch):
        ui = tmp_path / "dist"
        ui.mkdir()
        (ui / "index.html").write_text("<html>curation ui</html>", encoding="utf-8")
        monkeypatch.setenv("SCITECH_UI_DIR", str(ui))
        client = TestClient(create_app(fixture_run_copy.run_dir))
        r = client.get("/")
        assert r.status_code == 200
        assert "curation ui" in r.text
        # API routes still take precedence over the mount
        assert client.get("/api/v1/topics").status_code == 200

    def test_no_mount_without_bundle(self, fixture_run_copy, monkeypatch):
        monkeypatch.setenv("SCITECH_UI_DIR", "/nonexistent/path")
        client = TestClient(create_app(fixture_run_copy.run_dir))
        assert client.get("/").status_code == 404
        assert client.get("/api/v1/topics").status_code == 200
