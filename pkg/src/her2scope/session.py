"""Slide sessions: FOV ingestion, parameter overrides, exclusion ROIs,
persistence and score reporting.

State is a directory per session (source images plus a JSON state file); the
per-FOV artifacts needed for reports and overlays are persisted, so a
restarted service answers identical queries with identical bytes. Session
mutations are serialized by a per-session lock; reads are lock-free.
"""

from __future__ import annotations

import dataclasses
import json
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classify import CellClass, CellClassCounts, ClassifiedCells, counts as class_counts
from .config import AppConfig
from .detect import DetectorParams, HeatmapFileDetector, NucleusSet, detect_classical_with_provenance
from .errors import ConfigurationError, Her2ScopeError, IndeterminateScoreError
from .membrane import MembraneParams
from .overlay import overlay_geometry
from .pipeline import (
    OBJECTIVE_PIXEL_SIZES,
    FovComputation,
    StageTimings,
    apply_overrides,
    apply_exclusions,
    process_fov,
    validate_polygons,
)
from .raster import RasterImage, load_image, save_image
from .scoring import aggregate, get_rule_table, score

EXPECTED_FOV_SIDE = 3008
MIN_ADVISED_FOVS = 5


@dataclass
class FovRecord:
    fov_id: str
    image_file: str
    objective: str
    pixel_size: float
    included: bool = True
    exclusions: list[list[tuple[float, float]]] = field(default_factory=list)
    overrides: dict[int, CellClass] = field(default_factory=dict)
    raw_nuclei: list[tuple[int, int]] = field(default_factory=list)
    raw_provenance: list[str] = field(default_factory=list)
    nuclei: list[tuple[int, int]] = field(default_factory=list)
    assignments: list[str] = field(default_factory=list)  # aligned with nuclei
    counts: CellClassCounts = field(default_factory=CellClassCounts)
    overlay: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    heatmap_file: str | None = None


@dataclass
class SlideSession:
    session_id: str
    created_at: float
    detector: DetectorParams
    membrane: MembraneParams
    rules_id: str
    fovs: dict[str, FovRecord] = field(default_factory=dict)


def _params_to_dict(params) -> dict:
    d = dataclasses.asdict(params)
    if isinstance(params, MembraneParams) and d["enhancement"] is not None:
        d["enhancement"] = list(d["enhancement"])
    return d


def _membrane_from_dict(d: dict) -> MembraneParams:
    enh = d.get("enhancement")
    return MembraneParams(
        t_weak=d["t_weak"],
        t_intense=d["t_intense"],
        d=d["d"],
        enhancement=tuple(enh) if enh else None,
    )


class SessionStore:
    """Directory-backed store managing all slide sessions."""

    def __init__(self, root: str | Path, config: AppConfig | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config or AppConfig()
        self._sessions: dict[str, SlideSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()
        for state in self.root.glob("*/session.json"):
            session = self._load(state)
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()

    # -- lifecycle ----------------------------------------------------------

    def create_session(self, rule_table_id: str = "breast") -> str:
        get_rule_table(rule_table_id)  # raises on unknown table
        sid = uuid.uuid4().hex[:12]
        session = SlideSession(
            session_id=sid,
            created_at=time.time(),
            detector=self.config.detector,
            membrane=self.config.membrane,
            rules_id=rule_table_id,
        )
        with self._store_lock:
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
        (self.root / sid / "fovs").mkdir(parents=True, exist_ok=True)
        self._persist(session)
        return sid

    def session_ids(self) -> list[str]:
        return sorted(self._sessions)

    def _get(self, sid: str) -> SlideSession:
        try:
            return self._sessions[sid]
        except KeyError:
            raise ConfigurationError(f"unknown session: {sid}") from None

    def _lock(self, sid: str) -> threading.Lock:
        self._get(sid)
        return self._locks[sid]

    # -- mutations ----------------------------------------------------------

    def add_fov(
        self,
        sid: str,
        image: RasterImage | None = None,
        objective: str = "20x",
        image_bytes: bytes | None = None,
        heatmap_bytes: bytes | None = None,
    ) -> FovRecord:
        if objective not in OBJECTIVE_PIXEL_SIZES:
            raise ConfigurationError(f"objective must be one of {sorted(OBJECTIVE_PIXEL_SIZES)}")
        pixel_size = OBJECTIVE_PIXEL_SIZES[objective]
        with self._lock(sid):
            session = self._get(sid)
            fid = f"fov{len(session.fovs):03d}-{uuid.uuid4().hex[:6]}"
            fov_dir = self.root / sid / "fovs"
            fov_dir.mkdir(parents=True, exist_ok=True)
            image_file = f"{fid}.png"
            if image is None:
                if image_bytes is None:
                    raise ConfigurationError("add_fov needs an image")
                tmp = fov_dir / image_file
                tmp.write_bytes(image_bytes)
                image = load_image(tmp, pixel_size)
            else:
                image = RasterImage(image.pixels, pixel_size)
                save_image(image, fov_dir / image_file)
            heatmap_file = None
            if heatmap_bytes is not None:
                heatmap_file = f"{fid}.hmp"
                (fov_dir / heatmap_file).write_bytes(heatmap_bytes)

            record = FovRecord(
                fov_id=fid,
                image_file=image_file,
                objective=objective,
                pixel_size=pixel_size,
                heatmap_file=heatmap_file,
            )
            if image.width != EXPECTED_FOV_SIDE or image.height != EXPECTED_FOV_SIDE:
                record.warnings.append(
                    f"image is {image.width}x{image.height}, expected "
                    f"{EXPECTED_FOV_SIDE}x{EXPECTED_FOV_SIDE} for {objective}"
                )
            self._compute(session, record, image=image, reuse_detection=False)
            session.fovs[fid] = record
            self._persist(session)
            return record

    def update_params(
        self,
        sid: str,
        detector: DetectorParams | None = None,
        membrane: MembraneParams | None = None,
    ) -> dict:
        with self._lock(sid):
            session = self._get(sid)
            detector_changed = detector is not None and detector != session.detector
            if detector is not None:
                session.detector = detector
            if membrane is not None:
                session.membrane = membrane
            for record in session.fovs.values():
                self._compute(session, record, reuse_detection=not detector_changed)
            self._persist(session)
            return self.get_report(sid)

    def set_exclusions(self, sid: str, fid: str, polygons: list[list[tuple[float, float]]]) -> FovRecord:
        validate_polygons(polygons)
        with self._lock(sid):
            session = self._get(sid)
            record = self._get_fov(session, fid)
            record.exclusions = [[(float(x), float(y)) for x, y in poly] for poly in polygons]
            self._compute(session, record, reuse_detection=True)
            self._persist(session)
            return record

    def set_fov_included(self, sid: str, fid: str, included: bool) -> dict:
        with self._lock(sid):
            session = self._get(sid)
            record = self._get_fov(session, fid)
            record.included = bool(included)
            self._persist(session)
        return self.get_report(sid)

    def override_cell_class(self, sid: str, fid: str, index: int, cls: CellClass) -> FovRecord:
        with self._lock(sid):
            session = self._get(sid)
            record = self._get_fov(session, fid)
            if not 0 <= index < len(record.nuclei):
                raise ConfigurationError(f"nucleus index {index} out of range (0..{len(record.nuclei) - 1})")
            record.overrides[index] = cls
            self._compute(session, record, reuse_detection=True)
            self._persist(session)
            return record

    def clear_cell_override(self, sid: str, fid: str, index: int) -> FovRecord:
        with self._lock(sid):
            session = self._get(sid)
            record = self._get_fov(session, fid)
            record.overrides.pop(index, None)
            self._compute(session, record, reuse_detection=True)
            self._persist(session)
            return record

    # -- queries ------------------------------------------------------------

    def get_report(self, sid: str) -> dict:
        session = self._get(sid)
        rules = get_rule_table(session.rules_id)
        included = {fid for fid, r in session.fovs.items() if r.included}
        warnings: list[str] = []
        if 0 < len(included) < MIN_ADVISED_FOVS:
            warnings.append(f"only {len(included)} FOVs included; guideline advises at least {MIN_ADVISED_FOVS}")
        payload: dict = {
            "session_id": session.session_id,
            "rule_table": session.rules_id,
            "included_fovs": sorted(included),
            "fovs": [
                {
                    "fov_id": r.fov_id,
                    "objective": r.objective,
                    "included": r.included,
                    "counts": r.counts.as_dict(),
                    "total": r.counts.total,
                    "processing_time": r.timings.get("total", 0.0),
                    "warnings": list(r.warnings),
                }
                for _, r in sorted(session.fovs.items())
            ],
        }
        try:
            slide = aggregate({fid: session.fovs[fid].counts for fid in included}, included)
            result = score(slide, rules)
            payload.update(
                status="scored",
                score={
                    "value": result.value,
                    "category": result.category,
                    "triggering_proportion": result.triggering_proportion,
                    "rule_id": result.rule_id,
                },
                counts=slide.counts.as_dict(),
                total=slide.total,
                proportions=slide.proportions(),
                warnings=warnings + list(result.warnings),
            )
        except IndeterminateScoreError as exc:
            payload.update(
                status="indeterminate",
                score=None,
                counts=CellClassCounts().as_dict(),
                total=0,
                proportions={},
                warnings=warnings + [str(exc)],
            )
        return payload

    def report_bytes(self, sid: str) -> bytes:
        return json.dumps(self.get_report(sid), sort_keys=True, separators=(",", ":")).encode()

    def get_fov(self, sid: str, fid: str) -> FovRecord:
        return self._get_fov(self._get(sid), fid)

    def get_overlay(self, sid: str, fid: str) -> dict:
        return self._get_fov(self._get(sid), fid).overlay

    def load_fov_image(self, sid: str, fid: str) -> RasterImage:
        record = self.get_fov(sid, fid)
        return load_image(self.root / sid / "fovs" / record.image_file, record.pixel_size)

    def get_params(self, sid: str) -> dict:
        session = self._get(sid)
        return {
            "detector": _params_to_dict(session.detector),
            "membrane": _params_to_dict(session.membrane),
            "rules": session.rules_id,
        }

    # -- internals ----------------------------------------------------------

    def _get_fov(self, session: SlideSession, fid: str) -> FovRecord:
        try:
            return session.fovs[fid]
        except KeyError:
            raise ConfigurationError(f"unknown FOV: {fid}") from None

    def _compute(
        self,
        session: SlideSession,
        record: FovRecord,
        image: RasterImage | None = None,
        reuse_detection: bool = True,
    ) -> None:
        if image is None:
            image = load_image(self.root / session.session_id / "fovs" / record.image_file, record.pixel_size)
        heatmap_path = (
            self.root / session.session_id / "fovs" / record.heatmap_file if record.heatmap_file else None
        )

        t0 = time.perf_counter()
        if reuse_detection and record.raw_nuclei:
            raw = NucleusSet(
                np.array(record.raw_nuclei, dtype=np.int64).reshape(-1, 2),
                (image.width, image.height),
                record.pixel_size,
            )
            provenance = dict(zip((tuple(p) for p in record.raw_nuclei), record.raw_provenance))
        elif heatmap_path is not None:
            detector = HeatmapFileDetector(min_distance=session.detector.min_distance)
            raw = detector.detect(image, heatmap_path)
            provenance = {(int(x), int(y)): "heatmap" for x, y in raw.points}
        else:
            raw, provenance = detect_classical_with_provenance(image, session.detector)
        det_time = time.perf_counter() - t0

        comp = process_fov(
            image,
            session.detector,
            session.membrane,
            exclusion_polygons=record.exclusions,
            heatmap_path=None,
            precomputed_nuclei=(raw, provenance),
        )
        # manual overrides are stored per nucleus index (sorted coordinates)
        override_coords = {
            tuple(comp.nuclei.points[i]): cls
            for i, cls in record.overrides.items()
            if 0 <= i < len(comp.nuclei)
        }
        classified = apply_overrides(comp.classified, override_coords)
        tallies = class_counts(classified)
        comp = replace_computation(comp, classified, tallies)

        record.raw_nuclei = [(int(x), int(y)) for x, y in raw.points]
        record.raw_provenance = [provenance[(int(x), int(y))] for x, y in raw.points]
        record.nuclei = [(int(x), int(y)) for x, y in comp.nuclei.points]
        record.assignments = [classified.assignments[(x, y)].value for x, y in record.nuclei]
        record.counts = tallies
        record.overlay = overlay_geometry(comp, record.pixel_size)
        timings = StageTimings(det_time, comp.timings.membrane, comp.timings.classification)
        record.timings = {
            "detection": timings.detection,
            "membrane": timings.membrane,
            "classification": timings.classification,
            "total": timings.total,
        }

    def _persist(self, session: SlideSession) -> None:
        state = {
            "session_id": session.session_id,
            "created_at": session.created_at,
            "detector": _params_to_dict(session.detector),
            "membrane": _params_to_dict(session.membrane),
            "rules": session.rules_id,
            "fovs": {
                fid: {
                    "fov_id": r.fov_id,
                    "image_file": r.image_file,
                    "objective": r.objective,
                    "pixel_size": r.pixel_size,
                    "included": r.included,
                    "exclusions": [[[x, y] for x, y in poly] for poly in r.exclusions],
                    "overrides": {str(i): c.value for i, c in r.overrides.items()},
                    "raw_nuclei": [[x, y] for x, y in r.raw_nuclei],
                    "raw_provenance": r.raw_provenance,
                    "nuclei": [[x, y] for x, y in r.nuclei],
                    "assignments": r.assignments,
                    "counts": r.counts.as_dict(),
                    "overlay": r.overlay,
                    "timings": r.timings,
                    "warnings": r.warnings,
                    "heatmap_file": r.heatmap_file,
                }
                for fid, r in session.fovs.items()
            },
        }
        path = self.root / session.session_id / "session.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(state, sort_keys=True))

    def _load(self, state_path: Path) -> SlideSession:
        state = json.loads(state_path.read_text())
        session = SlideSession(
            session_id=state["session_id"],
            created_at=state["created_at"],
            detector=DetectorParams(**state["detector"]),
            membrane=_membrane_from_dict(state["membrane"]),
            rules_id=state["rules"],
        )
        for fid, r in state["fovs"].items():
            session.fovs[fid] = FovRecord(
                fov_id=r["fov_id"],
                image_file=r["image_file"],
                objective=r["objective"],
                pixel_size=r["pixel_size"],
                included=r["included"],
                exclusions=[[(x, y) for x, y in poly] for poly in r["exclusions"]],
                overrides={int(i): CellClass(c) for i, c in r["overrides"].items()},
                raw_nuclei=[(x, y) for x, y in r["raw_nuclei"]],
                raw_provenance=r["raw_provenance"],
                nuclei=[(x, y) for x, y in r["nuclei"]],
                assignments=r["assignments"],
                counts=CellClassCounts.from_dict(r["counts"]),
                overlay=r["overlay"],
                timings=r["timings"],
                warnings=r["warnings"],
                heatmap_file=r.get("heatmap_file"),
            )
        return session


def replace_computation(comp: FovComputation, classified: ClassifiedCells, tallies: CellClassCounts) -> FovComputation:
    comp.classified = classified
    comp.counts = tallies
    return comp
