import { describe, expect, it } from "vitest";

import { scorePanelView } from "../src/score.js";
import { makeReport, zeroCounts } from "./mock.js";

describe("scorePanelView", () => {
  it("projects a scored report verbatim", () => {
    const report = makeReport({
      status: "scored",
      score: { value: "2+", category: "equivocal", triggering_proportion: 0.123, rule_id: "B3" },
      counts: {
        intense_complete: 2,
        intense_incomplete: 1,
        weak_complete: 37,
        weak_incomplete: 10,
        no_staining: 250,
      },
      total: 300,
      proportions: {
        intense_complete: 2 / 300,
        weak_complete: 37 / 300,
      },
      warnings: ["fewer than 5 FOVs included"],
      included_fovs: ["f1", "f2"],
    });

    const view = scorePanelView(report);
    expect(view.headline).toBe("HER2 2+");
    expect(view.detail).toContain("equivocal");
    expect(view.detail).toContain("B3");
    expect(view.detail).toContain("12.3%");
    expect(view.total).toBe(300);
    expect(view.includedFovs).toBe(2);
    expect(view.warnings).toEqual(["fewer than 5 FOVs included"]);

    // One row per class, in the class order, counts taken from the report.
    expect(view.rows.map((r) => r.cellClass)).toEqual([
      "intense_complete",
      "intense_incomplete",
      "weak_complete",
      "weak_incomplete",
      "no_staining",
    ]);
    expect(view.rows.map((r) => r.count)).toEqual([2, 1, 37, 10, 250]);
    expect(view.rows[2].proportion).toBe("12.3%");
    expect(view.rows[1].proportion).toBe("—");
  });

  it("renders the indeterminate state when no rule matched", () => {
    const view = scorePanelView(makeReport());
    expect(view.headline).toBe("Indeterminate");
    expect(view.rows.map((r) => r.count)).toEqual([0, 0, 0, 0, 0]);
    expect(view.total).toBe(0);
  });

  it("never invents a proportion the service did not report", () => {
    const counts = zeroCounts();
    counts.no_staining = 7;
    const view = scorePanelView(makeReport({ counts, total: 7 }));
    for (const row of view.rows) expect(row.proportion).toBe("—");
  });
});
