"""Session-oriented HTTP API for interactive contour editing.

Sessions hold an image, a trained model and, after segmentation, an
editable contour. Edits move master points only; slave points are
display markers recomputed from the masters. Curve geometry is always
the centripetal spline through the masters, so a single move touches
only the segments whose control support contains the moved master.
"""

from __future__ import annotations

import base64
import io
import threading
import uuid
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel
from PIL import Image as PILImage

from . import engine, fileio, image as image_mod, metrics, pipeline, spline
from .align import PoseParams
from .errors import SplinesegError
from .metrics import EditSession
from .model import ShapeModel
from .spline import ControlShape, SplineConfig

DEFAULT_DENSITY = 32


class CreateSessionRequest(BaseModel):
    image: str
    model: str
    truth: str | None = None
    study_mode: bool = False
    channel: str | None = None


class SegmentRequest(BaseModel):
    schedule: str | None = None
    wait: bool = True


class MoveRequest(BaseModel):
    x: float
    y: float
    timestamp_ms: float
    density: int = DEFAULT_DENSITY


class ExportRequest(BaseModel):
    timestamp_ms: float | None = None


@dataclass
class Session:
    id: str
    token: str
    image: np.ndarray
    model_id: str
    model: ShapeModel
    truth: np.ndarray | None
    study_mode: bool
    config: SplineConfig
    masters: ControlShape | None = None
    edit: EditSession = dataclass_field(default_factory=EditSession)
    theta_before: float | None = None
    exported: bool = False
    seg_status: str = "idle"
    seg_error: str | None = None
    lock: threading.Lock = dataclass_field(default_factory=threading.Lock)
    thread: threading.Thread | None = None

    @property
    def epsilon(self) -> int:
        return self.model.meta.epsilon


def _decode_image(b64: str, channel: str | None = None) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
        with PILImage.open(io.BytesIO(raw)) as im:
            im.load()
            if im.mode in ("RGB", "RGBA"):
                if channel is None:
                    raise ValueError("color image needs a channel selection")
                idx = {"r": 0, "red": 0, "g": 1, "green": 1,
                       "b": 2, "blue": 2}[channel.lower()]
                arr = np.asarray(im.convert("RGB"), dtype=float)[:, :, idx]
                return arr / 255.0
            if im.mode in ("I", "I;16", "I;16B", "I;16L"):
                return np.asarray(im, dtype=float) / 65535.0
            return np.asarray(im.convert("L"), dtype=float) / 255.0
    except (OSError, KeyError, ValueError) as exc:
        raise HTTPException(status_code=400,
                            detail=f"bad image payload: {exc}") from exc


def _decode_mask(b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
        with PILImage.open(io.BytesIO(raw)) as im:
            return np.asarray(im.convert("L")) > 127
    except (OSError, ValueError) as exc:
        raise HTTPException(status_code=400,
                            detail=f"bad mask payload: {exc}") from exc


def _png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    if arr.dtype == bool:
        pil = PILImage.fromarray(arr.astype(np.uint8) * 255, mode="L")
    else:
        data = np.clip(np.asarray(arr, dtype=float), 0.0, 1.0)
        pil = PILImage.fromarray(np.round(data * 255).astype(np.uint8),
                                 mode="L")
    pil.save(buf, format="PNG")
    return buf.getvalue()


def _segment_samples(masters: ControlShape, config: SplineConfig,
                     density: int, only=None):
    """Per-part, per-segment sample arrays of the masters-only curve.

    only: optional {(part, segment), ...} filter.
    """
    cfg = spline.SplineConfig(
        alpha=config.alpha, rho=config.rho, samples_per_segment=density,
        inward_end_phantom=config.inward_end_phantom,
    )
    out = []
    for part_no, (start, stop) in enumerate(masters.parts):
        pts = masters.points[start:stop]
        n = len(pts)
        segs = []
        for seg in range(spline.segment_count(n, masters.topology)):
            if only is not None and (part_no, seg) not in only:
                continue
            samples = spline.sample_segment(pts, masters.topology, seg, cfg)
            segs.append({
                "index": seg,
                "points": [[float(x), float(y)] for x, y in samples],
            })
        out.append({"part": part_no, "segments": segs})
    return out


def _point_listing(session: Session):
    """Expanded-index listing of masters and derived slave markers."""
    masters = session.masters
    if session.epsilon > 0:
        expanded = spline.expand_shape(masters, session.epsilon,
                                       session.config)
    else:
        expanded = masters
    out_m, out_s = [], []
    for idx, ((x, y), is_m) in enumerate(zip(expanded.points,
                                             expanded.masters)):
        rec = {"index": idx, "x": float(x), "y": float(y)}
        (out_m if is_m else out_s).append(rec)
    return out_m, out_s, expanded


def create_app(data_dir) -> FastAPI:
    data_dir = Path(data_dir)
    models_dir = data_dir / "models"
    schedules_dir = data_dir / "schedules"
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    app = FastAPI(title="splineseg session service")

    def get_session(sid: str) -> Session:
        with registry_lock:
            session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {sid}")
        return session

    def check_token(session: Session, token: str | None):
        if token != session.token:
            raise HTTPException(
                status_code=409,
                detail="session is single-writer; supply X-Session-Token",
            )

    def model_path(model_id: str) -> Path:
        p = models_dir / f"{model_id}.json"
        if not p.is_file():
            raise HTTPException(status_code=404,
                                detail=f"unknown model {model_id}")
        return p

    def schedule_path(schedule_id: str) -> Path:
        p = schedules_dir / f"{schedule_id}.json"
        if not p.is_file():
            raise HTTPException(status_code=404,
                                detail=f"unknown schedule {schedule_id}")
        return p

    @app.get("/models")
    def list_models():
        out = []
        for p in sorted(models_dir.glob("*.json")):
            try:
                model = fileio.read_model(p)
            except ValueError:
                continue
            out.append({
                "id": p.stem,
                "points": model.n_points,
                "g": model.g,
                "epsilon": model.meta.epsilon,
                "topology": model.meta.topology,
                "alpha": model.meta.alpha,
                "rho": model.meta.rho,
            })
        return {"models": out}

    @app.get("/schedules")
    def list_schedules():
        out = []
        for p in sorted(schedules_dir.glob("*.json")):
            try:
                sched = fileio.read_schedule(p)
            except ValueError:
                continue
            out.append({
                "id": p.stem,
                "levels": sched.n_levels,
                "resolutions": [c.resolution for c in sched.levels],
            })
        return {"schedules": out}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        img = _decode_image(req.image, req.channel)
        model = fileio.read_model(model_path(req.model))
        truth = None
        if req.truth is not None:
            truth = _decode_mask(req.truth)
            if truth.shape != img.shape:
                raise HTTPException(
                    status_code=422,
                    detail=f"truth dims {truth.shape} do not match "
                           f"image dims {img.shape}",
                )
        if req.study_mode and truth is None:
            raise HTTPException(status_code=422,
                                detail="study mode needs a truth mask")
        meta = model.meta
        session = Session(
            id=uuid.uuid4().hex,
            token=uuid.uuid4().hex,
            image=img,
            model_id=req.model,
            model=model,
            truth=truth,
            study_mode=req.study_mode,
            config=SplineConfig(alpha=meta.alpha, rho=meta.rho),
        )
        with registry_lock:
            sessions[session.id] = session
        h, w = img.shape
        return {"id": session.id, "token": session.token,
                "width": w, "height": h, "study_mode": session.study_mode}

    @app.get("/sessions/{sid}")
    def session_status(sid: str):
        session = get_session(sid)
        with session.lock:
            rec = {
                "id": session.id,
                "status": session.seg_status,
                "has_contour": session.masters is not None,
                "exported": session.exported,
                "moves": session.edit.moves,
                "study_mode": session.study_mode,
                "truth_overlay": session.study_mode,
            }
            if session.seg_error:
                rec["error"] = session.seg_error
            if not session.study_mode and session.theta_before is not None:
                rec["theta_before"] = session.theta_before
        return rec

    @app.get("/sessions/{sid}/image")
    def session_image(sid: str):
        session = get_session(sid)
        img = session.image
        if session.study_mode:
            img = image_mod.invert(img)
        return Response(content=_png_bytes(img), media_type="image/png")

    @app.get("/sessions/{sid}/truth")
    def session_truth(sid: str):
        session = get_session(sid)
        if session.truth is None:
            raise HTTPException(status_code=404, detail="session has no truth")
        return Response(content=_png_bytes(session.truth),
                        media_type="image/png")

    def run_engine(session: Session, schedule_id: str | None):
        try:
            if schedule_id is not None:
                sched = fileio.read_schedule(schedule_path(schedule_id))
                flat, _ = engine.run_pyramid(session.image, session.model,
                                             sched)
            else:
                h, w = session.image.shape
                cfg = engine.LevelConfig(resolution=max(h, w), q=60,
                                         phi=session.model.phi)
                pose = PoseParams(theta=0.0, s=0.35 * min(h, w),
                                  tau_x=w / 2, tau_y=h / 2)
                flat, _ = engine.fit_single_level(session.image,
                                                 session.model, cfg, pose)
            masters = pipeline.contour_masters(flat, session.model.meta)
            with session.lock:
                session.masters = masters
                session.edit = EditSession()
                session.seg_status = "done"
                session.seg_error = None
                if session.truth is not None:
                    session.theta_before = metrics.overlap(
                        _session_mask(session), session.truth).theta
        except SplinesegError as exc:
            with session.lock:
                session.seg_status = "error"
                session.seg_error = f"{type(exc).__name__}: {exc}"

    def _session_mask(session: Session) -> np.ndarray:
        h, w = session.image.shape
        return engine.rasterize(session.masters, (w, h), session.config)

    @app.post("/sessions/{sid}/segment", status_code=200)
    def segment(sid: str, req: SegmentRequest,
                x_session_token: str | None = Header(default=None)):
        session = get_session(sid)
        check_token(session, x_session_token)
        with session.lock:
            if session.exported:
                raise HTTPException(status_code=409,
                                    detail="session is read-only after export")
            if session.seg_status == "running":
                raise HTTPException(status_code=409,
                                    detail="segmentation already running")
            if req.schedule is not None:
                schedule_path(req.schedule)
            session.seg_status = "running"
            session.thread = threading.Thread(
                target=run_engine, args=(session, req.schedule), daemon=True)
            session.thread.start()
        if not req.wait:
            return {"status": "running"}
        session.thread.join()
        with session.lock:
            if session.seg_status == "error":
                raise HTTPException(
                    status_code=500,
                    detail=f"segmentation failed: {session.seg_error}",
                )
            out_m, out_s, _ = _point_listing(session)
            rec = {"status": session.seg_status,
                   "masters": out_m, "slaves": out_s}
            if not session.study_mode and session.theta_before is not None:
                rec["theta_before"] = session.theta_before
        return rec

    @app.get("/sessions/{sid}/contour")
    def contour(sid: str, density: int = DEFAULT_DENSITY):
        session = get_session(sid)
        with session.lock:
            if session.masters is None:
                raise HTTPException(status_code=409,
                                    detail="session has no contour yet")
            if density < 1:
                raise HTTPException(status_code=422,
                                    detail="density must be >= 1")
            out_m, out_s, _ = _point_listing(session)
            return {
                "topology": session.masters.topology,
                "density": density,
                "alpha": session.config.alpha,
                "rho": session.config.rho,
                "parts": _segment_samples(session.masters, session.config,
                                          density),
                "masters": out_m,
                "slaves": out_s,
            }

    @app.patch("/sessions/{sid}/points/{index}")
    def move_point(sid: str, index: int, req: MoveRequest,
                   x_session_token: str | None = Header(default=None)):
        session = get_session(sid)
        check_token(session, x_session_token)
        with session.lock:
            if session.masters is None:
                raise HTTPException(status_code=409,
                                    detail="segment before editing")
            if session.exported:
                raise HTTPException(status_code=409,
                                    detail="session is read-only after export")
            out_m, out_s, expanded = _point_listing(session)
            n_expanded = len(expanded.points)
            if not 0 <= index < n_expanded:
                raise HTTPException(
                    status_code=404,
                    detail=f"point {index} does not exist "
                           f"(0..{n_expanded - 1})",
                )
            if not expanded.masters[index]:
                raise HTTPException(
                    status_code=404,
                    detail=f"point {index} is a slave point; slaves are "
                           "derived markers, only master points are editable",
                )
            master_ord = int(np.count_nonzero(expanded.masters[:index]))
            masters = session.masters
            old = masters.points[master_ord].copy()
            new_points = masters.points.copy()
            new_points[master_ord] = (req.x, req.y)
            try:
                moved = ControlShape(
                    points=new_points, masters=masters.masters.copy(),
                    topology=masters.topology, parts=list(masters.parts),
                )
                session.edit.record_move(req.timestamp_ms, index,
                                         (old[0], old[1]), (req.x, req.y))
            except (SplinesegError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            session.masters = moved
            part_no, pos = 0, master_ord
            for part_no, (start, stop) in enumerate(masters.parts):
                if start <= master_ord < stop:
                    pos = master_ord - start
                    break
            n_part = masters.parts[part_no][1] - masters.parts[part_no][0]
            segs = spline.segments_touching(n_part, masters.topology, pos)
            affected = {(part_no, s) for s in segs}
            out_m, out_s, _ = _point_listing(session)
            return {
                "moves": session.edit.moves,
                "affected": sorted(affected),
                "parts": _segment_samples(moved, session.config,
                                          req.density, only=affected),
                "masters": out_m,
                "slaves": out_s,
            }

    @app.post("/sessions/{sid}/export")
    def export(sid: str, req: ExportRequest,
               x_session_token: str | None = Header(default=None)):
        session = get_session(sid)
        check_token(session, x_session_token)
        with session.lock:
            if session.masters is None:
                raise HTTPException(status_code=409,
                                    detail="no contour to export")
            if session.exported:
                raise HTTPException(status_code=409,
                                    detail="session already exported")
            ts = req.timestamp_ms
            if ts is None and session.edit.events:
                ts = session.edit.events[-1].timestamp_ms
            if ts is not None:
                if (session.edit.events
                        and ts < session.edit.events[-1].timestamp_ms):
                    raise HTTPException(
                        status_code=422,
                        detail="export timestamp precedes last move",
                    )
                session.edit.record_export(ts)
            mask = _session_mask(session)
            theta_after = None
            if session.truth is not None:
                theta_after = metrics.overlap(mask, session.truth).theta
                session.edit.theta_before = session.theta_before
                session.edit.theta_after = theta_after
            record: dict = {
                "contour": fileio.shape_payload(session.masters,
                                                session.config,
                                                session.epsilon),
                "mask": base64.b64encode(_png_bytes(mask)).decode("ascii"),
                "event_log": metrics.write_event_log(session.edit),
                "moves": session.edit.moves,
                "duration": session.edit.duration,
                "theta_before": session.theta_before,
                "theta_after": theta_after,
                "metrics": None,
            }
            if session.edit.moves > 0:
                m = metrics.manipulation(session.edit)
                e = metrics.effort(session.edit)
                rec_metrics = {"manipulation": m, "effort": e}
                if (theta_after is not None
                        and session.theta_before is not None and e > 0):
                    rec_metrics["efficiency"] = metrics.efficiency(
                        session.edit)
                record["metrics"] = rec_metrics
            session.exported = True
        return record

    return app
