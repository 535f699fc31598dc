/** Debounced threshold editing: slider input is merged locally and committed
 * as a single PATCH once the user pauses, so the service recomputes at most
 * once per editing burst. */

import type { ApiClient } from "./api.js";
import type { MembraneParamsPatch } from "./types.js";

export interface ThresholdValues {
  t_weak: number;
  t_intense: number;
  d: number;
}

export interface ThresholdControllerOptions {
  api: ApiClient;
  sessionId: string;
  initial: ThresholdValues;
  debounceMs?: number;
  /** Called after each committed PATCH so the owner can refresh report/overlays. */
  onCommitted?: () => void;
  /** Called when a slider value is rejected client-side. */
  onInvalid?: (message: string) => void;
}

export class ThresholdController {
  private readonly api: ApiClient;
  private readonly sessionId: string;
  private readonly debounceMs: number;
  private readonly onCommitted?: () => void;
  private readonly onInvalid?: (message: string) => void;

  private committed: ThresholdValues;
  private pending: MembraneParamsPatch = {};
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: Promise<void> | null = null;

  constructor(opts: ThresholdControllerOptions) {
    this.api = opts.api;
    this.sessionId = opts.sessionId;
    this.committed = { ...opts.initial };
    this.debounceMs = opts.debounceMs ?? 300;
    this.onCommitted = opts.onCommitted;
    this.onInvalid = opts.onInvalid;
  }

  /** The values the service currently has. */
  get committedValues(): ThresholdValues {
    return { ...this.committed };
  }

  /** The values the UI should display (committed + pending edits). */
  get displayValues(): ThresholdValues {
    return { ...this.committed, ...this.pending };
  }

  get dirty(): boolean {
    return Object.keys(this.pending).length > 0;
  }

  /** Record a slider edit; the commit happens after the debounce interval
   * with all edits in the interval merged into one PATCH. Returns false if
   * the edit was rejected client-side. */
  setValue(key: keyof MembraneParamsPatch, value: number): boolean {
    const next = { ...this.displayValues, [key]: value };
    if (next.t_weak >= next.t_intense) {
      this.onInvalid?.("weak threshold must stay below intense threshold");
      return false;
    }
    if ((key === "t_weak" || key === "t_intense") && value <= 0) {
      this.onInvalid?.(`${key} must be positive`);
      return false;
    }
    if (key === "d" && value <= 0) {
      this.onInvalid?.("dilation radius must be positive");
      return false;
    }
    this.pending[key] = value;
    this.schedule();
    return true;
  }

  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.commit();
    }, this.debounceMs);
  }

  /** Commit pending edits immediately (also used by the debounce timer). */
  async commit(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (!this.dirty) return;
    // Serialize commits: a burst that lands while a PATCH is in flight waits
    // for it and then commits the merged remainder.
    if (this.inFlight) await this.inFlight;
    if (!this.dirty) return;
    const patch = this.pending;
    this.pending = {};
    const run = (async () => {
      await this.api.patchMembraneParams(this.sessionId, patch);
      this.committed = { ...this.committed, ...patch };
      this.onCommitted?.();
    })();
    this.inFlight = run.finally(() => {
      this.inFlight = null;
    });
    try {
      await this.inFlight;
    } catch (err) {
      // Failed commits restore the edits as pending so the UI stays dirty.
      this.pending = { ...patch, ...this.pending };
      throw err;
    }
  }

  /** Drop pending edits without contacting the service. */
  discard(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = {};
  }
}
