"""Overlay geometry and PNG rendering: class-colored nucleus points and
completeness-styled membrane polylines in full-resolution coordinates."""

from __future__ import annotations

from PIL import Image, ImageDraw

from .classify import CellClass
from .pipeline import FovComputation
from .raster import RasterImage

CLASS_COLORS = {
    CellClass.INTENSE_COMPLETE: (220, 20, 20),
    CellClass.INTENSE_INCOMPLETE: (255, 140, 0),
    CellClass.WEAK_COMPLETE: (30, 100, 255),
    CellClass.WEAK_INCOMPLETE: (0, 190, 190),
    CellClass.NO_STAINING: (120, 200, 60),
}
COMPLETE_CONTOUR_COLOR = (200, 0, 200)
INCOMPLETE_CONTOUR_COLOR = (250, 220, 0)


def overlay_geometry(result: FovComputation, full_pixel_size: float) -> dict:
    """JSON-serializable overlay: points with classes, contour polylines."""
    scale = result.bundle.pixel_size / full_pixel_size
    points = [
        {"x": int(x), "y": int(y), "class": cls.value}
        for (x, y), cls in sorted(result.classified.assignments.items())
    ]
    contours = [
        {
            "component_id": c.component_id,
            "complete": c.complete,
            "polyline": [[round(x * scale), round(y * scale)] for x, y in c.polyline],
        }
        for c in result.bundle.contour_labels
    ]
    return {"points": points, "contours": contours}


def render_overlay_png(image: RasterImage, geometry: dict, point_radius: int = 4) -> Image.Image:
    """Draw the overlay geometry on top of the FOV image."""
    im = Image.fromarray(image.pixels, mode="RGB").copy()
    draw = ImageDraw.Draw(im)
    for contour in geometry["contours"]:
        color = COMPLETE_CONTOUR_COLOR if contour["complete"] else INCOMPLETE_CONTOUR_COLOR
        pts = [tuple(p) for p in contour["polyline"]]
        if len(pts) >= 2:
            draw.line(pts, fill=color, width=2)
        elif pts:
            draw.point(pts[0], fill=color)
    for pt in geometry["points"]:
        color = CLASS_COLORS[CellClass(pt["class"])]
        x, y = pt["x"], pt["y"]
        draw.ellipse((x - point_radius, y - point_radius, x + point_radius, y + point_radius), fill=color)
    return im
