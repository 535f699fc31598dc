"""HTTP/JSON API over the session store.

Run with ``python -m her2scope.server [--config file]``; storage root and
listen address can also come from HER2SCOPE_STORAGE_ROOT / HER2SCOPE_LISTEN.
"""

from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import replace
from typing import Optional

from fastapi import Depends, FastAPI, File, Form, HTTPException, Request, Response, UploadFile
from pydantic import BaseModel

from .classify import CellClass
from .config import AppConfig, load_config
from .detect import DetectorParams
from .errors import ConfigurationError, Her2ScopeError, RoiError
from .membrane import MembraneParams
from .overlay import render_overlay_png
from .session import SessionStore


class CreateSessionBody(BaseModel):
    rule_table: str = "breast"


class ParamsBody(BaseModel):
    detector: Optional[dict] = None
    membrane: Optional[dict] = None


class ExclusionsBody(BaseModel):
    polygons: list[list[list[float]]]


class IncludedBody(BaseModel):
    included: bool


class CellClassBody(BaseModel):
    cell_class: Optional[str] = None  # null clears the override


def _http_error(exc: Her2ScopeError) -> HTTPException:
    msg = str(exc)
    if isinstance(exc, ConfigurationError) and msg.startswith("unknown"):
        return HTTPException(status_code=404, detail=msg)
    if isinstance(exc, RoiError):
        return HTTPException(status_code=422, detail=msg)
    return HTTPException(status_code=400, detail=msg)


def _fov_summary(record) -> dict:
    return {
        "fov_id": record.fov_id,
        "objective": record.objective,
        "included": record.included,
        "counts": record.counts.as_dict(),
        "total": record.counts.total,
        "nuclei": len(record.nuclei),
        "timings": record.timings,
        "warnings": record.warnings,
    }


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="her2scope session service")
    token = store.config.token

    async def check_auth(request: Request):
        if token and request.headers.get("authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or wrong token")

    dep = [Depends(check_auth)]

    @app.post("/sessions", dependencies=dep)
    def create_session(body: CreateSessionBody | None = None):
        try:
            sid = store.create_session((body or CreateSessionBody()).rule_table)
        except Her2ScopeError as exc:
            raise _http_error(exc)
        return {"session_id": sid}

    @app.post("/sessions/{sid}/fovs", dependencies=dep)
    def add_fov(
        sid: str,
        image: UploadFile = File(...),
        objective: str = Form("20x"),
        heatmap: UploadFile | None = File(None),
    ):
        try:
            record = store.add_fov(
                sid,
                image_bytes=image.file.read(),
                objective=objective,
                heatmap_bytes=heatmap.file.read() if heatmap is not None else None,
            )
        except Her2ScopeError as exc:
            raise _http_error(exc)
        return _fov_summary(record)

    @app.patch("/sessions/{sid}/params", dependencies=dep)
    def update_params(sid: str, body: ParamsBody):
        try:
            current = store.get_params(sid)
            detector = None
            membrane = None
            if body.detector is not None:
                merged = {**current["detector"], **body.detector}
                detector = DetectorParams(**merged)
            if body.membrane is not None:
                merged = {**current["membrane"], **body.membrane}
                enh = merged.get("enhancement")
                merged["enhancement"] = tuple(enh) if enh else None
                membrane = MembraneParams(**merged)
            return store.update_params(sid, detector=detector, membrane=membrane)
        except Her2ScopeError as exc:
            raise _http_error(exc)

    @app.get("/sessions/{sid}/params", dependencies=dep)
    def get_params(sid: str):
        try:
            return store.get_params(sid)
        except Her2ScopeError as exc:
            raise _http_error(exc)

    @app.put("/sessions/{sid}/fovs/{fid}/exclusions", dependencies=dep)
    def set_exclusions(sid: str, fid: str, body: ExclusionsBody):
        try:
            polygons = [[(x, y) for x, y in poly] for poly in body.polygons]
            record = store.set_exclusions(sid, fid, polygons)
        except Her2ScopeError as exc:
            raise _http_error(exc)
        return _fov_summary(record)

    @app.put("/sessions/{sid}/fovs/{fid}/included", dependencies=dep)
    def set_included(sid: str, fid: str, body: IncludedBody):
        try:
            return store.set_fov_included(sid, fid, body.included)
        except Her2ScopeError as exc:
            raise _http_error(exc)

    @app.put("/sessions/{sid}/fovs/{fid}/cells/{index}/class", dependencies=dep)
    def override_cell(sid: str, fid: str, index: int, body: CellClassBody):
        try:
            if body.cell_class is None:
                record = store.clear_cell_override(sid, fid, index)
            else:
                record = store.override_cell_class(sid, fid, index, CellClass(body.cell_class))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except Her2ScopeError as exc:
            raise _http_error(exc)
        return _fov_summary(record)

    @app.get("/sessions/{sid}/report", dependencies=dep)
    def get_report(sid: str):
        try:
            return Response(content=store.report_bytes(sid), media_type="application/json")
        except Her2ScopeError as exc:
            raise _http_error(exc)

    @app.get("/sessions/{sid}/fovs/{fid}/overlay", dependencies=dep)
    def get_overlay(sid: str, fid: str, format: str = "json"):
        try:
            geometry = store.get_overlay(sid, fid)
            if format == "json":
                return geometry
            if format == "png":
                image = store.load_fov_image(sid, fid)
                buf = io.BytesIO()
                render_overlay_png(image, geometry).save(buf, format="PNG")
                return Response(content=buf.getvalue(), media_type="image/png")
            raise HTTPException(status_code=422, detail="format must be json or png")
        except Her2ScopeError as exc:
            raise _http_error(exc)

    return app


def main(argv: list[str] | None = None) -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="her2scope session service")
    parser.add_argument("--config", default=None, help="key=value config file")
    args = parser.parse_args(argv)
    config = load_config(args.config)
    store = SessionStore(config.storage_root, config)
    host, _, port = config.listen.partition(":")
    uvicorn.run(create_app(store), host=host or "127.0.0.1", port=int(port or 8417))


if __name__ == "__main__":
    main()
