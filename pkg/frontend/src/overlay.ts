/** Overlay view model: holds the geometry returned by the service and the
 * per-layer visibility toggles. All cardinalities come straight from the
 * service response; toggles only filter what is drawn. */

import { CELL_CLASSES } from "./types.js";
import type { CellClass, OverlayContour, OverlayGeometry, OverlayPoint } from "./types.js";

/** Marker colors, one per class, plus the two contour layers. */
export const CLASS_COLORS: Record<CellClass, string> = {
  intense_complete: "rgb(220,20,20)",
  intense_incomplete: "rgb(255,140,0)",
  weak_complete: "rgb(30,100,255)",
  weak_incomplete: "rgb(0,190,190)",
  no_staining: "rgb(120,200,60)",
};

export const CONTOUR_COLORS = {
  complete: "rgb(200,0,200)",
  incomplete: "rgb(250,220,0)",
} as const;

export type ContourLayer = keyof typeof CONTOUR_COLORS;

export class OverlayModel {
  private geometry: OverlayGeometry = { points: [], contours: [] };
  private readonly classVisible = new Map<CellClass, boolean>();
  private readonly contourVisible: Record<ContourLayer, boolean> = {
    complete: true,
    incomplete: true,
  };

  constructor() {
    for (const c of CELL_CLASSES) this.classVisible.set(c, true);
  }

  setGeometry(geometry: OverlayGeometry): void {
    this.geometry = geometry;
  }

  /** Total counts per class as reported by the service geometry. */
  pointCounts(): Record<CellClass, number> {
    const counts = Object.fromEntries(CELL_CLASSES.map((c) => [c, 0])) as Record<CellClass, number>;
    for (const p of this.geometry.points) counts[p.class] += 1;
    return counts;
  }

  contourCounts(): Record<ContourLayer, number> {
    const counts: Record<ContourLayer, number> = { complete: 0, incomplete: 0 };
    for (const c of this.geometry.contours) counts[c.complete ? "complete" : "incomplete"] += 1;
    return counts;
  }

  isClassVisible(cls: CellClass): boolean {
    return this.classVisible.get(cls) ?? true;
  }

  isContourLayerVisible(layer: ContourLayer): boolean {
    return this.contourVisible[layer];
  }

  toggleClass(cls: CellClass): boolean {
    const next = !this.isClassVisible(cls);
    this.classVisible.set(cls, next);
    return next;
  }

  toggleContourLayer(layer: ContourLayer): boolean {
    this.contourVisible[layer] = !this.contourVisible[layer];
    return this.contourVisible[layer];
  }

  /** Points to draw under the current toggles. */
  visiblePoints(): OverlayPoint[] {
    return this.geometry.points.filter((p) => this.isClassVisible(p.class));
  }

  visibleContours(): OverlayContour[] {
    return this.geometry.contours.filter(
      (c) => this.contourVisible[c.complete ? "complete" : "incomplete"],
    );
  }

  /** Index (into the service's cell list) of the visible point nearest to
   * (x, y) within `radius` pixels, or null. Used for click-to-override. */
  hitTest(x: number, y: number, radius: number): number | null {
    let best: number | null = null;
    let bestD2 = radius * radius;
    this.geometry.points.forEach((p, i) => {
      if (!this.isClassVisible(p.class)) return;
      const d2 = (p.x - x) ** 2 + (p.y - y) ** 2;
      if (d2 <= bestD2) {
        bestD2 = d2;
        best = i;
      }
    });
    return best;
  }
}
