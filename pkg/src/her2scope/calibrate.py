"""Joint grid search for the weak/intense membrane thresholds.

Maximizes per-cell classification accuracy over a fixture set with known
ground-truth classes, using the ground-truth nucleus positions so the search
measures membrane description alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classify import CellClass, classify_cells
from .detect import NucleusSet
from .errors import ConfigurationError
from .fixtures import CellTruth
from .membrane import MembraneParams, run_membrane_pipeline
from .ops import rgb_to_hed
from .raster import RasterImage, load_image


@dataclass(frozen=True)
class CalibrationResult:
    t_weak: float
    t_intense: float
    accuracy: float
    warnings: tuple[str, ...] = ()

    def config_fragment(self) -> str:
        return f"membrane.t_weak = {self.t_weak}\nmembrane.t_intense = {self.t_intense}\n"


def load_fixture_set(manifest_path: str | Path) -> list[tuple[RasterImage, list[CellTruth]]]:
    """Load images plus per-cell truth from a fixture manifest.json."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    entries = json.loads(manifest_path.read_text())
    out = []
    for entry in entries:
        image = load_image(manifest_path.parent / entry["image"], entry["pixel_size"])
        truth = [
            CellTruth(x=c["x"], y=c["y"], cell_class=CellClass(c["class"]), in_dcis=c.get("in_dcis", False))
            for c in entry["cells"]
        ]
        out.append((image, truth))
    return out


def calibrate_thresholds(
    fixtures: list[tuple[RasterImage, list[CellTruth]]],
    base_params: MembraneParams | None = None,
    weak_grid: np.ndarray | None = None,
    intense_grid: np.ndarray | None = None,
) -> CalibrationResult:
    """Grid search over (t_weak, t_intense) pairs; deterministic tie-break
    toward the lexicographically smallest pair."""
    if not fixtures:
        raise ConfigurationError("calibration needs at least one fixture")
    base = base_params or MembraneParams()
    weak_grid = weak_grid if weak_grid is not None else np.round(np.arange(0.05, 0.45, 0.05), 3)
    intense_grid = intense_grid if intense_grid is not None else np.round(np.arange(0.25, 0.85, 0.05), 3)

    warnings: list[str] = []
    seen_classes = {t.cell_class for _, truth in fixtures for t in truth}
    if len(seen_classes) < 2:
        warnings.append(f"fixture set is degenerate: only {sorted(c.value for c in seen_classes)} present")

    # the DAB channel does not depend on the thresholds; compute it once
    prepared = []
    for image, truth in fixtures:
        half = image.downsample2()
        dab = rgb_to_hed(half).dab
        pts = np.array([[t.x, t.y] for t in truth], dtype=np.int64).reshape(-1, 2)
        nuclei = NucleusSet(pts, (image.width, image.height), image.pixel_size)
        truth_by_pt = {(t.x, t.y): t.cell_class for t in truth}
        prepared.append((dab, nuclei, truth_by_pt))

    best: tuple[float, float, float] | None = None
    for tw in weak_grid:
        for ti in intense_grid:
            if not tw < ti:
                continue
            params = replace(base, t_weak=float(tw), t_intense=float(ti))
            correct = 0
            total = 0
            for dab, nuclei, truth_by_pt in prepared:
                if len(nuclei) == 0:
                    continue
                bundle = run_membrane_pipeline(dab, params)
                classified = classify_cells(nuclei, bundle)
                for (x, y), got in classified.assignments.items():
                    total += 1
                    if got == truth_by_pt[(x, y)]:
                        correct += 1
            if total == 0:
                raise ConfigurationError("fixture set contains no cells")
            acc = correct / total
            if best is None or acc > best[2] + 1e-12:
                best = (float(tw), float(ti), acc)
    assert best is not None
    return CalibrationResult(t_weak=best[0], t_intense=best[1], accuracy=best[2], warnings=tuple(warnings))
