"""Interactive HER2 IHC scoring workbench.

Per-FOV tumor-nucleus detection, membrane staining description, five-way
cell classification and slide-level guideline scoring, with batch (CLI) and
interactive (HTTP session service) front ends.
"""

from .classify import CellClass, CellClassCounts, ClassifiedCells, classify_cells, counts
from .detect import (
    ClassicalDetector,
    DetectionMetrics,
    DetectorParams,
    HeatmapFileDetector,
    NucleusSet,
    detect_classical,
    match_detections,
    peaks_from_heatmap,
)
from .membrane import MembraneMaskBundle, MembraneParams, run_membrane_pipeline
from .raster import BinaryMask, PointSet, RasterImage, ScalarChannel, StainChannels
from .scoring import BREAST_RULES, Her2Score, ScoreRules, SlideCounts, aggregate, score

__version__ = "0.1.0"

__all__ = [
    "BREAST_RULES",
    "BinaryMask",
    "CellClass",
    "CellClassCounts",
    "ClassicalDetector",
    "ClassifiedCells",
    "DetectionMetrics",
    "DetectorParams",
    "HeatmapFileDetector",
    "Her2Score",
    "MembraneMaskBundle",
    "MembraneParams",
    "NucleusSet",
    "PointSet",
    "RasterImage",
    "ScalarChannel",
    "ScoreRules",
    "SlideCounts",
    "StainChannels",
    "aggregate",
    "classify_cells",
    "counts",
    "detect_classical",
    "match_detections",
    "peaks_from_heatmap",
    "run_membrane_pipeline",
    "score",
]
