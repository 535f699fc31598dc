import { describe, expect, it } from "vitest";

import { OverlayModel } from "../src/overlay.js";
import type { OverlayGeometry } from "../src/types.js";

const geometry: OverlayGeometry = {
  points: [
    { x: 10, y: 10, class: "intense_complete" },
    { x: 30, y: 10, class: "intense_complete" },
    { x: 50, y: 10, class: "weak_incomplete" },
    { x: 70, y: 10, class: "no_staining" },
    { x: 90, y: 10, class: "no_staining" },
    { x: 110, y: 10, class: "no_staining" },
  ],
  contours: [
    { component_id: 1, complete: true, polyline: [[0, 0], [1, 0], [1, 1]] },
    { component_id: 2, complete: false, polyline: [[5, 5], [6, 5]] },
    { component_id: 3, complete: false, polyline: [[9, 9], [9, 10]] },
  ],
};

describe("OverlayModel", () => {
  it("reports cardinalities identical to the service geometry", () => {
    const model = new OverlayModel();
    model.setGeometry(geometry);
    expect(model.pointCounts()).toEqual({
      intense_complete: 2,
      intense_incomplete: 0,
      weak_complete: 0,
      weak_incomplete: 1,
      no_staining: 3,
    });
    expect(model.contourCounts()).toEqual({ complete: 1, incomplete: 2 });
    expect(model.visiblePoints()).toHaveLength(geometry.points.length);
    expect(model.visibleContours()).toHaveLength(geometry.contours.length);
  });

  it("toggles filter what is drawn but not the counts", () => {
    const model = new OverlayModel();
    model.setGeometry(geometry);

    expect(model.toggleClass("no_staining")).toBe(false);
    expect(model.visiblePoints()).toHaveLength(3);
    expect(model.visiblePoints().every((p) => p.class !== "no_staining")).toBe(true);
    expect(model.pointCounts().no_staining).toBe(3);

    expect(model.toggleClass("no_staining")).toBe(true);
    expect(model.visiblePoints()).toHaveLength(6);

    model.toggleContourLayer("incomplete");
    expect(model.visibleContours()).toEqual([geometry.contours[0]]);
    expect(model.contourCounts().incomplete).toBe(2);
  });

  it("hit-tests the nearest visible point and returns its service index", () => {
    const model = new OverlayModel();
    model.setGeometry(geometry);
    expect(model.hitTest(31, 11, 5)).toBe(1);
    expect(model.hitTest(31, 11, 0.5)).toBeNull();
    // Hidden classes are not clickable.
    model.toggleClass("intense_complete");
    expect(model.hitTest(31, 11, 5)).toBeNull();
  });
});
