import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ThresholdController } from "../src/state.js";
import { MockService } from "./mock.js";

function makeController(svc: MockService, onInvalid?: (m: string) => void) {
  const api = new ApiClient({ baseUrl: "http://svc", fetchFn: svc.fetch });
  svc.on("PATCH", "/sessions/s1/params", { detector: {}, membrane: {} });
  return new ThresholdController({
    api,
    sessionId: "s1",
    initial: { t_weak: 0.15, t_intense: 0.45, d: 1.5 },
    onInvalid,
  });
}

describe("ThresholdController debouncing", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("merges a burst of slider edits into exactly one PATCH", async () => {
    const svc = new MockService();
    const ctl = makeController(svc);

    ctl.setValue("t_weak", 0.2);
    vi.advanceTimersByTime(100);
    ctl.setValue("t_weak", 0.22);
    vi.advanceTimersByTime(100);
    ctl.setValue("t_intense", 0.5);
    expect(svc.requests).toHaveLength(0);
    expect(ctl.dirty).toBe(true);

    await vi.advanceTimersByTimeAsync(300);

    const patches = svc.requestsTo("PATCH", "/sessions/s1/params");
    expect(patches).toHaveLength(1);
    expect(patches[0].body).toEqual({ membrane: { t_weak: 0.22, t_intense: 0.5 } });
    expect(ctl.dirty).toBe(false);
    expect(ctl.committedValues).toEqual({ t_weak: 0.22, t_intense: 0.5, d: 1.5 });
  });

  it("does not commit before the debounce interval elapses", () => {
    const svc = new MockService();
    const ctl = makeController(svc);
    ctl.setValue("d", 2.0);
    vi.advanceTimersByTime(299);
    expect(svc.requests).toHaveLength(0);
  });

  it("sends a second PATCH for a second, separate burst", async () => {
    const svc = new MockService();
    const ctl = makeController(svc);

    ctl.setValue("t_weak", 0.2);
    await vi.advanceTimersByTimeAsync(300);
    ctl.setValue("d", 3.0);
    await vi.advanceTimersByTimeAsync(300);

    const patches = svc.requestsTo("PATCH", "/sessions/s1/params");
    expect(patches).toHaveLength(2);
    expect(patches[0].body).toEqual({ membrane: { t_weak: 0.2 } });
    expect(patches[1].body).toEqual({ membrane: { d: 3.0 } });
  });

  it("rejects edits that would put t_weak at or above t_intense", async () => {
    const svc = new MockService();
    const messages: string[] = [];
    const ctl = makeController(svc, (m) => messages.push(m));

    expect(ctl.setValue("t_weak", 0.45)).toBe(false);
    expect(ctl.setValue("t_weak", 0.6)).toBe(false);
    expect(ctl.setValue("t_intense", 0.1)).toBe(false);
    expect(messages).toHaveLength(3);
    expect(ctl.dirty).toBe(false);

    await vi.advanceTimersByTimeAsync(1000);
    expect(svc.requests).toHaveLength(0);
  });

  it("keeps edits pending and restores them if the PATCH fails", async () => {
    const svc = new MockService();
    const api = new ApiClient({ baseUrl: "http://svc", fetchFn: svc.fetch });
    // No PATCH route registered: the mock answers 404.
    const ctl = new ThresholdController({
      api,
      sessionId: "s1",
      initial: { t_weak: 0.15, t_intense: 0.45, d: 1.5 },
    });
    ctl.setValue("t_weak", 0.2);
    await expect(ctl.commit()).rejects.toThrow("404");
    expect(ctl.dirty).toBe(true);
    expect(ctl.displayValues.t_weak).toBe(0.2);
    expect(ctl.committedValues.t_weak).toBe(0.15);
  });

  it("discard drops pending edits without a request", async () => {
    const svc = new MockService();
    const ctl = makeController(svc);
    ctl.setValue("t_weak", 0.3);
    ctl.discard();
    await vi.advanceTimersByTimeAsync(1000);
    expect(svc.requests).toHaveLength(0);
    expect(ctl.displayValues.t_weak).toBe(0.15);
  });
});
