"""HTTP session service: lifecycle, editing locality, metric consistency.

All requests go through an in-process test client against an app backed
by the shared synthetic corpus (model "blob", schedule "blob"). Full
pyramid fits are cheap at this scale, so tests segment as often as they
like.
"""

from __future__ import annotations

import base64
import io
import json
from types import SimpleNamespace

import numpy as np
import pytest
from PIL import Image as PILImage

from splineseg import fileio, metrics, spline
from splineseg.engine import rasterize


@pytest.fixture(scope="module")
def client(service_data_dir):
    from fastapi.testclient import TestClient

    from splineseg.service import create_app

    with TestClient(create_app(service_data_dir)) as c:
        yield c


@pytest.fixture(scope="module")
def sample(corpus_dir, corpus_meta):
    stem = corpus_meta["test"][0]
    image_path = corpus_dir / "images" / f"image_{stem}.png"
    truth_path = corpus_dir / "truths" / f"truth_{stem}.png"

    def b64(path):
        return base64.b64encode(path.read_bytes()).decode("ascii")

    return SimpleNamespace(image=b64(image_path), truth=b64(truth_path),
                           image_path=image_path, truth_path=truth_path)


def png_b64(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    if arr.dtype == bool:
        PILImage.fromarray(arr.astype(np.uint8) * 255, mode="L").save(
            buf, format="PNG")
    else:
        PILImage.fromarray(np.asarray(arr, dtype=np.uint8),
                           mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create(client, sample, *, truth=True, study=False):
    body = {"image": sample.image, "model": "blob"}
    if truth:
        body["truth"] = sample.truth
    if study:
        body["study_mode"] = True
    r = client.post("/sessions", json=body)
    assert r.status_code == 201, r.text
    return r.json()["id"], r.json()["token"]


def segment(client, sid, token, schedule="blob"):
    r = client.post(f"/sessions/{sid}/segment",
                    json={"schedule": schedule},
                    headers={"X-Session-Token": token})
    assert r.status_code == 200, r.text
    return r.json()


def full_contour(client, sid, density=16):
    r = client.get(f"/sessions/{sid}/contour",
                   params={"density": density})
    assert r.status_code == 200, r.text
    return r.json()


def segment_arrays(parts):
    """{(part, segment): samples array} from a contour payload."""
    return {(p["part"], s["index"]): np.array(s["points"])
            for p in parts for s in p["segments"]}


def move(client, sid, token, index, xy, ts, density=16):
    return client.patch(
        f"/sessions/{sid}/points/{index}",
        json={"x": xy[0], "y": xy[1], "timestamp_ms": ts,
              "density": density},
        headers={"X-Session-Token": token})


def export(client, sid, token, ts=None):
    body = {} if ts is None else {"timestamp_ms": ts}
    return client.post(f"/sessions/{sid}/export", json=body,
                       headers={"X-Session-Token": token})


class TestCatalog:
    def test_models_listing(self, client):
        r = client.get("/models")
        assert r.status_code == 200
        entry = {m["id"]: m for m in r.json()["models"]}["blob"]
        assert entry["points"] == 16
        assert entry["epsilon"] == 1
        assert entry["topology"] == spline.CLOSED
        assert entry["g"] >= 1
        # the editor's preview mirror reads these
        assert entry["alpha"] == 0.5
        assert entry["rho"] == 0.5

    def test_schedules_listing(self, client):
        r = client.get("/schedules")
        assert r.status_code == 200
        entry = {s["id"]: s for s in r.json()["schedules"]}["blob"]
        assert entry["levels"] == 3
        assert entry["resolutions"] == [32, 64, 128]


class TestCreateSession:
    def test_valid_grayscale_creates(self, client, sample):
        r = client.post("/sessions", json={"image": sample.image,
                                           "model": "blob"})
        assert r.status_code == 201
        body = r.json()
        assert body["id"] and body["token"]
        assert body["width"] == 128 and body["height"] == 128
        assert body["study_mode"] is False

    def test_truth_dims_mismatch_is_422(self, client, sample):
        small = png_b64(np.zeros((64, 64), dtype=bool))
        r = client.post("/sessions", json={
            "image": sample.image, "model": "blob", "truth": small})
        assert r.status_code == 422
        assert "dims" in r.json()["detail"]

    def test_study_mode_without_truth_is_422(self, client, sample):
        r = client.post("/sessions", json={
            "image": sample.image, "model": "blob", "study_mode": True})
        assert r.status_code == 422
        assert "truth" in r.json()["detail"]

    def test_unknown_model_is_404(self, client, sample):
        r = client.post("/sessions", json={"image": sample.image,
                                           "model": "ghost"})
        assert r.status_code == 404

    def test_garbage_payload_is_400(self, client):
        r = client.post("/sessions", json={"image": "@@not-base64@@",
                                           "model": "blob"})
        assert r.status_code == 400
        r = client.post("/sessions", json={
            "image": base64.b64encode(b"plain text").decode(),
            "model": "blob"})
        assert r.status_code == 400

    def test_color_image_needs_channel(self, client):
        buf = io.BytesIO()
        PILImage.new("RGB", (128, 128), (40, 80, 120)).save(buf, "PNG")
        rgb = base64.b64encode(buf.getvalue()).decode("ascii")
        r = client.post("/sessions", json={"image": rgb, "model": "blob"})
        assert r.status_code == 400
        assert "channel" in r.json()["detail"]
        r = client.post("/sessions", json={"image": rgb, "model": "blob",
                                           "channel": "red"})
        assert r.status_code == 201

    def test_unknown_session_is_404(self, client):
        assert client.get("/sessions/deadbeef").status_code == 404


class TestSegment:
    def test_returns_flagged_points_and_overlap(self, client, sample):
        sid, token = create(client, sample)
        body = segment(client, sid, token)
        assert body["status"] == "done"
        master_idx = sorted(m["index"] for m in body["masters"])
        slave_idx = sorted(s["index"] for s in body["slaves"])
        assert master_idx == list(range(0, 16, 2))
        assert slave_idx == list(range(1, 16, 2))
        assert 0.0 < body["theta_before"] <= 1.0
        status = client.get(f"/sessions/{sid}").json()
        assert status["has_contour"] is True
        assert status["moves"] == 0
        assert status["theta_before"] == body["theta_before"]

    def test_requires_writer_token(self, client, sample):
        sid, token = create(client, sample)
        r = client.post(f"/sessions/{sid}/segment", json={"schedule": "blob"})
        assert r.status_code == 409
        r = client.post(f"/sessions/{sid}/segment",
                        json={"schedule": "blob"},
                        headers={"X-Session-Token": "wrong"})
        assert r.status_code == 409

    def test_rerun_replaces_contour_and_resets_log(self, client, sample):
        sid, token = create(client, sample)
        first = segment(client, sid, token)
        m0 = first["masters"][0]
        r = move(client, sid, token, m0["index"],
                 (m0["x"] + 4.0, m0["y"]), 1000.0)
        assert r.status_code == 200
        assert client.get(f"/sessions/{sid}").json()["moves"] == 1
        second = segment(client, sid, token)
        assert client.get(f"/sessions/{sid}").json()["moves"] == 0
        assert second["masters"] == first["masters"]

    def test_unknown_schedule_is_404(self, client, sample):
        sid, token = create(client, sample)
        r = client.post(f"/sessions/{sid}/segment",
                        json={"schedule": "ghost"},
                        headers={"X-Session-Token": token})
        assert r.status_code == 404

    def test_no_schedule_runs_single_level_fit(self, client, sample):
        sid, token = create(client, sample, truth=False)
        body = segment(client, sid, token, schedule=None)
        assert body["status"] == "done"
        assert len(body["masters"]) == 8
        assert "theta_before" not in body

    def test_engine_failure_maps_to_500(self, client, sample):
        img = np.asarray(PILImage.open(sample.image_path))
        shrunk = SimpleNamespace(image=png_b64(img[::2, ::2]), truth=None)
        sid, token = create(client, shrunk, truth=False)
        r = client.post(f"/sessions/{sid}/segment",
                        json={"schedule": "blob"},
                        headers={"X-Session-Token": token})
        assert r.status_code == 500
        detail = r.json()["detail"]
        assert "segmentation failed" in detail
        assert "ScheduleMismatch" in detail
        assert client.get(f"/sessions/{sid}").json()["status"] == "error"


class TestContour:
    def test_before_segmentation_is_409(self, client, sample):
        sid, _ = create(client, sample, truth=False)
        r = client.get(f"/sessions/{sid}/contour")
        assert r.status_code == 409

    def test_density_must_be_positive(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        r = client.get(f"/sessions/{sid}/contour", params={"density": 0})
        assert r.status_code == 422

    def test_segment_structure(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        body = full_contour(client, sid, density=9)
        assert body["topology"] == spline.CLOSED
        assert body["alpha"] == 0.5 and body["rho"] == 0.5
        segs = segment_arrays(body["parts"])
        assert sorted(segs) == [(0, s) for s in range(8)]
        for arr in segs.values():
            assert arr.shape == (10, 2)
        masters = {m["index"]: (m["x"], m["y"]) for m in body["masters"]}
        # segment k starts at master k and ends at master k+1 (wrapping)
        for k in range(8):
            start = np.array(masters[2 * k])
            assert np.allclose(segs[(0, k)][0], start, atol=1e-9)
            assert np.allclose(segs[(0, k)][-1],
                               segs[(0, (k + 1) % 8)][0], atol=1e-9)

    def test_density_sets_sample_count(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        segs = segment_arrays(full_contour(client, sid, density=5)["parts"])
        assert all(arr.shape == (6, 2) for arr in segs.values())


class TestMovePoint:
    def test_slave_index_is_404_with_role_explanation(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        r = move(client, sid, token, 1, (10.0, 10.0), 100.0)
        assert r.status_code == 404
        detail = r.json()["detail"]
        assert "slave" in detail
        assert "master" in detail

    def test_unknown_index_is_404(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        r = move(client, sid, token, 99, (10.0, 10.0), 100.0)
        assert r.status_code == 404
        assert "does not exist" in r.json()["detail"]

    def test_before_segmentation_is_409(self, client, sample):
        sid, token = create(client, sample, truth=False)
        r = move(client, sid, token, 0, (10.0, 10.0), 100.0)
        assert r.status_code == 409

    def test_requires_writer_token(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        r = client.patch(f"/sessions/{sid}/points/0",
                         json={"x": 1.0, "y": 2.0, "timestamp_ms": 1.0})
        assert r.status_code == 409

    def test_move_back_restores_curve_exactly(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        before = segment_arrays(full_contour(client, sid)["parts"])
        masters = {m["index"]: (m["x"], m["y"])
                   for m in full_contour(client, sid)["masters"]}
        idx = 4
        x0, y0 = masters[idx]
        assert move(client, sid, token, idx, (x0 + 3.5, y0 - 2.25),
                    1000.0).status_code == 200
        r = move(client, sid, token, idx, (x0, y0), 2000.0)
        assert r.status_code == 200
        assert r.json()["moves"] == 2
        after = segment_arrays(full_contour(client, sid)["parts"])
        for key in before:
            assert np.array_equal(before[key], after[key])

    def test_locality_exact_segment_diff(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        before = segment_arrays(full_contour(client, sid, density=12)["parts"])
        masters = {m["index"]: (m["x"], m["y"])
                   for m in full_contour(client, sid)["masters"]}
        idx = 6          # expanded index of the fourth master
        x0, y0 = masters[idx]
        r = move(client, sid, token, idx, (x0 + 2.0, y0 + 1.0), 500.0,
                 density=12)
        assert r.status_code == 200
        body = r.json()
        expected = [[0, s]
                    for s in spline.segments_touching(8, spline.CLOSED, 3)]
        assert body["affected"] == expected
        after = segment_arrays(full_contour(client, sid, density=12)["parts"])
        affected = {tuple(a) for a in body["affected"]}
        for key in before:
            if key in affected:
                assert not np.array_equal(before[key], after[key])
            else:
                assert np.array_equal(before[key], after[key])
        returned = segment_arrays(body["parts"])
        assert set(returned) == affected
        for key, arr in returned.items():
            assert np.array_equal(arr, after[key])

    def test_slaves_rederive_near_the_move_only(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        before = {s["index"]: (s["x"], s["y"])
                  for s in full_contour(client, sid)["slaves"]}
        masters = {m["index"]: (m["x"], m["y"])
                   for m in full_contour(client, sid)["masters"]}
        idx = 6
        x0, y0 = masters[idx]
        body = move(client, sid, token, idx, (x0 + 2.0, y0 + 1.0),
                    500.0).json()
        moved = {m["index"]: (m["x"], m["y"]) for m in body["masters"]}
        assert moved[idx] == (x0 + 2.0, y0 + 1.0)
        after = {s["index"]: (s["x"], s["y"]) for s in body["slaves"]}
        assert after[5] != before[5] and after[7] != before[7]
        assert after[13] == before[13]


class TestExport:
    def _contour_shape(self, record, tmp_path):
        path = tmp_path / "contour.json"
        path.write_text(json.dumps(record["contour"]))
        return fileio.read_shape(path)

    def test_zero_move_export_omits_metrics(self, client, sample, tmp_path):
        sid, token = create(client, sample)
        segment(client, sid, token)
        r = export(client, sid, token)
        assert r.status_code == 200
        record = r.json()
        assert record["metrics"] is None
        assert record["moves"] == 0
        assert record["duration"] == 0.0
        assert record["theta_after"] == record["theta_before"]
        mask = np.asarray(PILImage.open(io.BytesIO(
            base64.b64decode(record["mask"])))) > 127
        shape, config, _ = self._contour_shape(record, tmp_path)
        assert np.array_equal(mask, rasterize(shape, (128, 128), config))

    def test_no_contour_is_409(self, client, sample):
        sid, token = create(client, sample, truth=False)
        assert export(client, sid, token).status_code == 409

    def test_double_export_is_409(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        assert export(client, sid, token).status_code == 200
        r = export(client, sid, token)
        assert r.status_code == 409
        assert "already exported" in r.json()["detail"]

    def test_session_read_only_after_export(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        masters = full_contour(client, sid)["masters"]
        assert export(client, sid, token).status_code == 200
        m0 = masters[0]
        r = move(client, sid, token, m0["index"],
                 (m0["x"] + 1.0, m0["y"]), 9999.0)
        assert r.status_code == 409
        r = client.post(f"/sessions/{sid}/segment", json={"schedule": "blob"},
                        headers={"X-Session-Token": token})
        assert r.status_code == 409

    def test_export_timestamp_before_last_move_is_422(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        m0 = full_contour(client, sid)["masters"][0]
        assert move(client, sid, token, m0["index"],
                    (m0["x"] + 1.0, m0["y"]), 5000.0).status_code == 200
        r = export(client, sid, token, ts=4000.0)
        assert r.status_code == 422
        assert "precedes" in r.json()["detail"]

    def test_export_defaults_to_last_move_timestamp(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        m0 = full_contour(client, sid)["masters"][0]
        assert move(client, sid, token, m0["index"],
                    (m0["x"] + 1.0, m0["y"]), 5000.0).status_code == 200
        record = export(client, sid, token).json()
        assert record["duration"] == 0.0
        assert record["metrics"] == {"manipulation": 0.0, "effort": 0.0}

    def test_scripted_study_session_metrics(self, client, sample):
        """Fifteen moves over thirty seconds: 2 s per move, effort 60.

        Overlap stays hidden while the study session is live and appears
        only in the export record; the exported event log recomputes the
        identical metric values offline.
        """
        sid, token = create(client, sample, study=True)
        body = segment(client, sid, token)
        assert "theta_before" not in body
        assert "theta_before" not in client.get(f"/sessions/{sid}").json()
        assert client.get(f"/sessions/{sid}").json()["truth_overlay"] is True

        m0 = full_contour(client, sid)["masters"][2]
        idx, x0, y0 = m0["index"], m0["x"], m0["y"]
        t0 = 10_000.0
        for k in range(15):
            # odd moves push the master out, even moves bring it home
            target = (x0 + 0.75, y0) if k % 2 == 0 else (x0, y0)
            if k == 14:
                target = (x0, y0)
            r = move(client, sid, token, idx, target, t0 + 2000.0 * k)
            assert r.status_code == 200
        record = export(client, sid, token, ts=t0 + 30_000.0).json()

        assert record["moves"] == 15
        assert record["duration"] == 30.0
        assert record["metrics"]["manipulation"] == 2.0
        assert record["metrics"]["effort"] == 60.0
        # final move returned the master home, so the overlap is unchanged
        assert record["theta_after"] == record["theta_before"]
        assert record["metrics"]["efficiency"] == 0.0

        log = metrics.read_event_log(record["event_log"])
        assert log.moves == 15
        assert metrics.manipulation(log) == record["metrics"]["manipulation"]
        assert metrics.effort(log) == record["metrics"]["effort"]
        assert metrics.efficiency(log) == record["metrics"]["efficiency"]

    def test_event_log_replays_edits_bit_for_bit(self, client, sample):
        sid, token = create(client, sample, truth=False)
        segment(client, sid, token)
        m = full_contour(client, sid)["masters"]
        moves_script = [
            (m[1]["index"], (m[1]["x"] + 1.25, m[1]["y"] - 0.5), 100.0),
            (m[5]["index"], (m[5]["x"] - 2.0, m[5]["y"] + 1.0), 350.0),
            (m[1]["index"], (m[1]["x"], m[1]["y"]), 900.0),
        ]
        for idx, xy, ts in moves_script:
            assert move(client, sid, token, idx, xy, ts).status_code == 200
        record = export(client, sid, token, ts=1200.0).json()
        log = metrics.read_event_log(record["event_log"])
        assert [(e.index, e.new_xy, e.timestamp_ms) for e in log.events] == \
            [(idx, xy, ts) for idx, xy, ts in moves_script]
        assert log.export_timestamp_ms == 1200.0


class TestSessionIsolation:
    def test_edits_do_not_leak_between_sessions(self, client, sample):
        sid_a, tok_a = create(client, sample, truth=False)
        sid_b, tok_b = create(client, sample, truth=False)
        segment(client, sid_a, tok_a)
        segment(client, sid_b, tok_b)
        base_a = segment_arrays(full_contour(client, sid_a)["parts"])
        base_b = segment_arrays(full_contour(client, sid_b)["parts"])
        for key in base_a:
            assert np.array_equal(base_a[key], base_b[key])
        m0 = full_contour(client, sid_a)["masters"][0]
        assert move(client, sid_a, tok_a, m0["index"],
                    (m0["x"] + 5.0, m0["y"]), 10.0).status_code == 200
        after_b = segment_arrays(full_contour(client, sid_b)["parts"])
        for key in base_b:
            assert np.array_equal(base_b[key], after_b[key])
        assert client.get(f"/sessions/{sid_b}").json()["moves"] == 0
        assert client.get(f"/sessions/{sid_a}").json()["moves"] == 1


class TestImageEndpoints:
    def test_image_round_trips(self, client, sample):
        sid, _ = create(client, sample, truth=False)
        r = client.get(f"/sessions/{sid}/image")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        served = np.asarray(PILImage.open(io.BytesIO(r.content)))
        original = np.asarray(PILImage.open(sample.image_path).convert("L"))
        assert np.array_equal(served, original)

    def test_study_mode_serves_exact_negative(self, client, sample):
        sid, _ = create(client, sample, study=True)
        r = client.get(f"/sessions/{sid}/image")
        served = np.asarray(PILImage.open(io.BytesIO(r.content)))
        original = np.asarray(PILImage.open(sample.image_path).convert("L"))
        assert np.array_equal(served, 255 - original)

    def test_truth_endpoint(self, client, sample):
        sid, _ = create(client, sample)
        r = client.get(f"/sessions/{sid}/truth")
        assert r.status_code == 200
        served = np.asarray(PILImage.open(io.BytesIO(r.content))) > 127
        want = np.asarray(PILImage.open(sample.truth_path).convert("L")) > 127
        assert np.array_equal(served, want)
        sid2, _ = create(client, sample, truth=False)
        assert client.get(f"/sessions/{sid2}/truth").status_code == 404
