"""HTTP facade over the texturing engine for the companion UI.

Versioned under ``/v1``.  A session holds one uploaded mesh with its
chart plus the demonstration state (element, events, current
suggestion).  All computation is pure: replaying the same uploads and
event batches into a fresh session produces byte-identical artifacts.

Sessions live in memory only and are evicted after 30 idle minutes.
Requests within one session are serialized by a per-session mutex;
distinct sessions are fully independent.

Run with ``uvicorn meshtex.service:app``.
"""

from __future__ import annotations

import base64
import binascii
import math
import secrets
import threading
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .autocomplete import (
    AutocompleteError,
    CurvePath,
    PlacementEvent,
    complete_along_curve,
    infer_pattern,
)
from .extrude import ExtrudeError, extrude_texture
from .geom2d import PolygonError, TriangulationError
from .imprint import ImprintError, SeamSplitWarning, imprint
from .mesh import MeshError, check_watertight, export_mesh, load_mesh
from .segmentation import SegmentationError, infer_region
from .svgelem import ElementError, load_element
from .uvmap import ChartError, FlipError, build_chart, chart_boundary

IDLE_SECONDS = 1800.0  # 30 idle minutes, then the session is evicted
CURSOR_QUANTUM = 0.1   # mm, hover cursors snap to this grid

_ENGINE_INPUT_ERRORS = (
    AutocompleteError,
    ChartError,
    ElementError,
    FlipError,
    MeshError,
    PolygonError,
    SegmentationError,
    TriangulationError,
)


# --------------------------------------------------------------- sessions


@dataclass
class Session:
    id: str
    mesh: object
    chart: object
    outline: object
    summary: dict
    element: object = None
    events: list = field(default_factory=list)
    curve: CurvePath | None = None
    suggestion: object = None
    region_cache: dict = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = 0.0


class SessionStore:
    """In-memory session map with idle eviction."""

    def __init__(self, idle_seconds: float, clock):
        self.idle_seconds = float(idle_seconds)
        self.clock = clock
        self._sessions: dict = {}
        self._lock = threading.Lock()

    def _evict_idle(self, now: float) -> None:
        dead = [
            sid
            for sid, s in self._sessions.items()
            if now - s.last_access > self.idle_seconds
        ]
        for sid in dead:
            del self._sessions[sid]

    def create(self, **kwargs) -> Session:
        with self._lock:
            now = self.clock()
            self._evict_idle(now)
            sid = secrets.token_hex(16)
            session = Session(id=sid, last_access=now, **kwargs)
            self._sessions[sid] = session
            return session

    def get(self, sid: str) -> Session | None:
        with self._lock:
            now = self.clock()
            self._evict_idle(now)
            session = self._sessions.get(sid)
            if session is not None:
                session.last_access = now
            return session


# --------------------------------------------------------------- schemas


class MeshUpload(BaseModel):
    format: str
    data: str  # base64


class ElementUpload(BaseModel):
    svg: str  # base64


class EventIn(BaseModel):
    seq: int
    x: float
    y: float
    rotation: float = 0.0
    scale: float = 1.0


class EventBatch(BaseModel):
    events: list[EventIn] = []
    curve: list[tuple[float, float]] | None = None
    reset: bool = False


class ApplyRequest(BaseModel):
    mode: str
    depth: float | None = None
    wall_ref: float | None = None


def _finite_or_none(value) -> float | None:
    x = float(value)
    return x if math.isfinite(x) else None


def _b64(data: str, what: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError):
        raise _ClientError("%s is not valid base64" % what)


class _ClientError(Exception):
    """Maps to a 400 response."""


class _ConflictError(Exception):
    """Maps to a 409 response."""


def _suggestion_json(suggestion) -> dict | None:
    if suggestion is None:
        return None
    return {
        "kind": suggestion.kind,
        "placements": [
            {
                "seq": int(e.seq),
                "x": float(e.anchor[0]),
                "y": float(e.anchor[1]),
                "rotation": float(e.rotation),
                "scale": float(e.scale),
            }
            for e in suggestion.placements
        ],
    }


def _recompute_suggestion(session: Session) -> None:
    """Refresh the suggestion from the full event list.

    A demonstration that does not (yet) form a recognizable pattern is
    a normal interactive state, not a client error, so it simply yields
    no suggestion.
    """
    # seq is the demonstration order; HTTP arrival order is not.
    events = sorted(session.events, key=lambda e: e.seq)
    element_shape = (
        session.element.shape if session.element is not None else None
    )
    session.suggestion = None
    if len(events) < 2:
        return
    try:
        if session.curve is not None:
            session.suggestion = complete_along_curve(
                events, session.curve, session.outline, element_shape
            )
        else:
            session.suggestion = infer_pattern(
                events, session.outline, element_shape
            )
    except AutocompleteError:
        session.suggestion = None


# --------------------------------------------------------------- app


def create_app(
    idle_seconds: float = IDLE_SECONDS, clock=time.monotonic
) -> FastAPI:
    app = FastAPI(title="meshtex service", version="1")
    store = SessionStore(idle_seconds, clock)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def _validation_as_400(request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=400)

    @app.exception_handler(_ClientError)
    async def _client_as_400(request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=400)

    @app.exception_handler(_ConflictError)
    async def _conflict_as_409(request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=409)

    def _session_or_404(sid: str) -> Session:
        session = store.get(sid)
        if session is None:
            raise _ClientError404(sid)
        return session

    class _ClientError404(Exception):
        def __init__(self, sid):
            self.sid = sid

    @app.exception_handler(_ClientError404)
    async def _missing_as_404(request, exc):
        return JSONResponse(
            {"detail": "no session %s" % exc.sid}, status_code=404
        )

    @app.post("/v1/sessions")
    def create_session(upload: MeshUpload):
        data = _b64(upload.data, "mesh data")
        try:
            mesh = load_mesh(data, upload.format)
            chart = build_chart(mesh)
            outline = chart_boundary(chart)
        except _ENGINE_INPUT_ERRORS as exc:
            raise _ClientError(str(exc))
        report = check_watertight(mesh)
        summary = {
            "mesh": {
                "vertices": mesh.n_vertices,
                "faces": mesh.n_faces,
                "watertight": report.is_watertight,
            },
            "chart": {
                "faces": chart.n_faces,
                "max_area_distortion": chart.max_area_distortion,
                "seams": len(chart.seam_edges),
            },
        }
        session = store.create(
            mesh=mesh, chart=chart, outline=outline, summary=summary
        )
        return {"id": session.id, **summary}

    @app.post("/v1/sessions/{sid}/element")
    def set_element(sid: str, upload: ElementUpload):
        session = _session_or_404(sid)
        with session.lock:
            try:
                element = load_element(_b64(upload.svg, "svg"))
                session.element = element
                _recompute_suggestion(session)
            except _ENGINE_INPUT_ERRORS as exc:
                raise _ClientError(str(exc))
            return {
                "area": element.shape.area,
                "nominal_size": element.nominal_size,
                "suggestion": _suggestion_json(session.suggestion),
            }

    @app.get("/v1/sessions/{sid}/region")
    def region(sid: str, x: float, y: float, z: float):
        session = _session_or_404(sid)
        with session.lock:
            key = (
                round(x / CURSOR_QUANTUM),
                round(y / CURSOR_QUANTUM),
                round(z / CURSOR_QUANTUM),
            )
            cached = session.region_cache.get(key)
            if cached is None:
                cursor = np.array(key, dtype=np.float64) * CURSOR_QUANTUM
                try:
                    found = infer_region(session.mesh, cursor)
                except _ENGINE_INPUT_ERRORS as exc:
                    raise _ClientError(str(exc))
                cached = {
                    "faces": [int(f) for f in found.faces],
                    "boundary": np.asarray(found.boundary_loop).tolist(),
                    "score": _finite_or_none(found.score),
                    "level": _finite_or_none(found.level),
                }
                session.region_cache[key] = cached
            return cached

    @app.post("/v1/sessions/{sid}/events")
    def post_events(sid: str, batch: EventBatch):
        session = _session_or_404(sid)
        with session.lock:
            if batch.reset:
                session.events = []
                session.curve = None
            if batch.curve is not None:
                try:
                    session.curve = CurvePath(
                        np.asarray(batch.curve, dtype=np.float64)
                    )
                except _ENGINE_INPUT_ERRORS as exc:
                    raise _ClientError(str(exc))
            for e in batch.events:
                session.events.append(
                    PlacementEvent(
                        anchor=np.array([e.x, e.y], dtype=np.float64),
                        rotation=float(e.rotation),
                        scale=float(e.scale),
                        seq=int(e.seq),
                    )
                )
            try:
                _recompute_suggestion(session)
            except _ENGINE_INPUT_ERRORS as exc:
                raise _ClientError(str(exc))
            return {"suggestion": _suggestion_json(session.suggestion)}

    @app.post("/v1/sessions/{sid}/apply")
    def apply(sid: str, request: ApplyRequest):
        session = _session_or_404(sid)
        with session.lock:
            if session.element is None:
                raise _ConflictError("no element uploaded for this session")
            if session.suggestion is None:
                raise _ConflictError("no suggestion to accept yet")
            placements = sorted(
                session.suggestion.placements, key=lambda e: e.seq
            )
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", SeamSplitWarning)
                    im = imprint(
                        session.mesh, session.chart, session.element,
                        placements,
                    )
                out_mesh = extrude_texture(
                    im, request.mode,
                    depth=request.depth, wall_ref=request.wall_ref,
                )
            except (ImprintError, ExtrudeError) as exc:
                raise _ConflictError(str(exc))
            closed_input = (
                check_watertight(session.mesh).boundary_edge_count == 0
            )
            if closed_input and request.mode != "cutout":
                report = check_watertight(out_mesh)
                if not report.is_watertight:
                    raise _ConflictError(
                        "result failed validation: %d boundary, "
                        "%d non-manifold, %d inconsistently wound edges"
                        % (
                            report.boundary_edge_count,
                            report.nonmanifold_edge_count,
                            report.inconsistent_winding_count,
                        )
                    )
            return Response(
                content=export_mesh(out_mesh, "stl"),
                media_type="model/stl",
                headers={"X-Placement-Count": str(len(placements))},
            )

    return app


app = create_app()
