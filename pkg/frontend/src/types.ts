/** JSON shapes of the session service API. */

export const CELL_CLASSES = [
  "intense_complete",
  "intense_incomplete",
  "weak_complete",
  "weak_incomplete",
  "no_staining",
] as const;

export type CellClass = (typeof CELL_CLASSES)[number];

export type ClassCounts = Record<CellClass, number>;

export interface FovSummary {
  fov_id: string;
  objective: string;
  included: boolean;
  counts: ClassCounts;
  total: number;
  nuclei: number;
  timings: Record<string, number>;
  warnings: string[];
}

export interface OverlayPoint {
  x: number;
  y: number;
  class: CellClass;
}

export interface OverlayContour {
  component_id: number;
  complete: boolean;
  polyline: [number, number][];
}

export interface OverlayGeometry {
  points: OverlayPoint[];
  contours: OverlayContour[];
}

export interface ScoreResult {
  value: string;
  category: string;
  triggering_proportion: number;
  rule_id: string;
}

export interface Report {
  session_id: string;
  rule_table: string;
  status: "scored" | "indeterminate";
  score: ScoreResult | null;
  counts: ClassCounts;
  total: number;
  proportions: Partial<Record<CellClass, number>>;
  warnings: string[];
  included_fovs: string[];
  fovs: Array<{
    fov_id: string;
    objective: string;
    included: boolean;
    counts: ClassCounts;
    total: number;
    processing_time: number;
    warnings: string[];
  }>;
}

export interface MembraneParamsPatch {
  t_weak?: number;
  t_intense?: number;
  d?: number;
}

export interface SessionParams {
  detector: Record<string, number>;
  membrane: Record<string, number | number[] | null> & {
    t_weak: number;
    t_intense: number;
    d: number;
  };
}
