import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { scorePanelView } from "../src/score.js";
import { WorkbenchSession } from "../src/session.js";
import type { FovSummary, Report } from "../src/types.js";
import { MockService, makeReport, zeroCounts } from "./mock.js";

const defaultParams = {
  detector: {},
  membrane: { t_weak: 0.15, t_intense: 0.45, d: 1.5 },
};

function fovSummary(overrides: Partial<FovSummary> = {}): FovSummary {
  return {
    fov_id: "f1",
    objective: "20x",
    included: true,
    counts: { ...zeroCounts(), weak_complete: 12, no_staining: 88 },
    total: 100,
    nuclei: 100,
    timings: { total: 0.5 },
    warnings: [],
    ...overrides,
  };
}

function makeSession(svc: MockService) {
  svc.on("POST", "/sessions", { session_id: "s1" });
  svc.on("GET", "/sessions/s1/params", defaultParams);
  const api = new ApiClient({ baseUrl: "http://svc", fetchFn: svc.fetch });
  return { api, create: (events = {}) => WorkbenchSession.create(api, events) };
}

describe("WorkbenchSession", () => {
  it("creates a session and seeds thresholds from the service params", async () => {
    const svc = new MockService();
    const { create } = makeSession(svc);
    const session = await create();
    expect(session.sessionId).toBe("s1");
    expect(session.thresholds.committedValues).toEqual({ t_weak: 0.15, t_intense: 0.45, d: 1.5 });
  });

  it("whole-frame exclusion zeroes every displayed count via the service", async () => {
    const svc = new MockService();
    const { create } = makeSession(svc);

    // Before exclusion the service reports 100 cells; after the PUT it
    // reports zero. The UI must show whatever the service last said.
    let excluded = false;
    svc.on("PUT", "/sessions/s1/fovs/f1/exclusions", () => {
      excluded = true;
      return fovSummary({ counts: zeroCounts(), total: 0, nuclei: 0 });
    });
    svc.on("GET", "/sessions/s1/report", (): Report => {
      if (!excluded) {
        return makeReport({
          counts: fovSummary().counts,
          total: 100,
          included_fovs: ["f1"],
        });
      }
      return makeReport({ counts: zeroCounts(), total: 0, included_fovs: ["f1"] });
    });
    svc.on("GET", "/sessions/s1/fovs/f1/overlay", () =>
      excluded ? { points: [], contours: [] } : { points: [{ x: 1, y: 1, class: "weak_complete" }], contours: [] },
    );

    const reports: Report[] = [];
    const session = await create({ onReportChanged: (r: Report) => reports.push(r) });
    // Seed the session's FOV list the way an upload would.
    svc.on("POST", "/sessions/s1/fovs", fovSummary());
    await session.addFov(new Blob(["x"]), "20x");
    expect(session.fovList[0].total).toBe(100);
    expect(scorePanelView(reports.at(-1)!).total).toBe(100);

    await session.setExclusions("f1", [[[0, 0], [511, 0], [511, 511], [0, 511]]]);

    const putBody = svc.requestsTo("PUT", "/sessions/s1/fovs/f1/exclusions")[0].body;
    expect(putBody).toEqual({ polygons: [[[0, 0], [511, 0], [511, 511], [0, 511]]] });
    expect(session.fovList[0].total).toBe(0);
    const view = scorePanelView(reports.at(-1)!);
    expect(view.total).toBe(0);
    expect(view.rows.map((r) => r.count)).toEqual([0, 0, 0, 0, 0]);
    const geometry = await session.refreshOverlay("f1");
    expect(geometry.points).toHaveLength(0);
  });

  it("a committed threshold change refreshes the report and every overlay", async () => {
    vi.useFakeTimers();
    const svc = new MockService();
    const { create } = makeSession(svc);
    svc.on("POST", "/sessions/s1/fovs", fovSummary());
    svc.on("PATCH", "/sessions/s1/params", {});
    svc.on("GET", "/sessions/s1/report", makeReport({ included_fovs: ["f1"] }));
    svc.on("GET", "/sessions/s1/fovs/f1/overlay", { points: [], contours: [] });

    const session = await create();
    await session.addFov(new Blob(["x"]), "20x");
    const reportsBefore = svc.requestsTo("GET", "/sessions/s1/report").length;

    session.thresholds.setValue("t_weak", 0.2);
    await vi.advanceTimersByTimeAsync(300);
    await vi.runAllTimersAsync();
    vi.useRealTimers();
    await new Promise((r) => setTimeout(r, 0));

    expect(svc.requestsTo("PATCH", "/sessions/s1/params")).toHaveLength(1);
    expect(svc.requestsTo("GET", "/sessions/s1/report").length).toBe(reportsBefore + 1);
    expect(svc.requestsTo("GET", "/sessions/s1/fovs/f1/overlay").length).toBeGreaterThan(0);
  });

  it("cell overrides round-trip through the service", async () => {
    const svc = new MockService();
    const { create } = makeSession(svc);
    svc.on("POST", "/sessions/s1/fovs", fovSummary());
    svc.on("GET", "/sessions/s1/report", makeReport({ included_fovs: ["f1"] }));
    svc.on("GET", "/sessions/s1/fovs/f1/overlay", { points: [], contours: [] });
    svc.on(
      "PUT",
      "/sessions/s1/fovs/f1/cells/3/class",
      fovSummary({ counts: { ...zeroCounts(), intense_complete: 1, weak_complete: 11, no_staining: 88 } }),
    );

    const session = await create();
    await session.addFov(new Blob(["x"]), "20x");
    await session.overrideCell("f1", 3, "intense_complete");

    const put = svc.requestsTo("PUT", "/sessions/s1/fovs/f1/cells/3/class")[0];
    expect(put.body).toEqual({ cell_class: "intense_complete" });
    expect(session.fovList[0].counts.intense_complete).toBe(1);
  });
});

describe("ApiClient", () => {
  it("sends the bearer token and surfaces error details", async () => {
    let auth: string | null = null;
    const fetchFn = async (url: string, init?: RequestInit) => {
      auth = new Headers(init?.headers).get("authorization");
      void url;
      return new Response(JSON.stringify({ detail: "unknown session" }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    };
    const api = new ApiClient({ baseUrl: "http://svc", token: "secret", fetchFn });
    await expect(api.getReport("nope")).rejects.toThrow(ApiError);
    await expect(api.getReport("nope")).rejects.toThrow("unknown session");
    expect(auth).toBe("Bearer secret");
  });
});

afterEach(() => vi.useRealTimers());
beforeEach(() => vi.useRealTimers());
