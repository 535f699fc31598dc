/** Score panel view: a pure projection of the service's report JSON into
 * display rows. Nothing here computes a score — it only formats one. */

import { CELL_CLASSES } from "./types.js";
import type { CellClass, Report } from "./types.js";

export const CLASS_LABELS: Record<CellClass, string> = {
  intense_complete: "Intense complete",
  intense_incomplete: "Intense incomplete",
  weak_complete: "Weak complete",
  weak_incomplete: "Weak incomplete",
  no_staining: "No staining",
};

export interface ScoreRow {
  cellClass: CellClass;
  label: string;
  count: number;
  /** Percentage string like "12.3%", or "—" when the report omits it. */
  proportion: string;
}

export interface ScorePanelView {
  headline: string;
  detail: string;
  rows: ScoreRow[];
  total: number;
  includedFovs: number;
  warnings: string[];
}

function pct(value: number | undefined): string {
  return value === undefined ? "—" : `${(value * 100).toFixed(1)}%`;
}

export function scorePanelView(report: Report): ScorePanelView {
  const rows: ScoreRow[] = CELL_CLASSES.map((c) => ({
    cellClass: c,
    label: CLASS_LABELS[c],
    count: report.counts[c],
    proportion: pct(report.proportions[c]),
  }));
  let headline: string;
  let detail: string;
  if (report.status === "scored" && report.score !== null) {
    headline = `HER2 ${report.score.value}`;
    detail =
      `${report.score.category} — rule ${report.score.rule_id}, ` +
      `triggering proportion ${pct(report.score.triggering_proportion)}`;
  } else {
    headline = "Indeterminate";
    detail = "No rule matched the current counts.";
  }
  return {
    headline,
    detail,
    rows,
    total: report.total,
    includedFovs: report.included_fovs.length,
    warnings: report.warnings,
  };
}
