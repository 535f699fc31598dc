/** Workbench session orchestration: keeps the FOV list, the current report,
 * and per-FOV overlay geometry in sync with the service. Every mutation goes
 * through the API and is followed by a report refresh, so displayed counts
 * and scores are always the service's numbers. */

import type { ApiClient } from "./api.js";
import { ThresholdController } from "./state.js";
import type { ThresholdValues } from "./state.js";
import type { FovSummary, OverlayGeometry, Report } from "./types.js";

export interface WorkbenchEvents {
  onFovsChanged?: (fovs: FovSummary[]) => void;
  onReportChanged?: (report: Report) => void;
  onOverlayChanged?: (fovId: string, geometry: OverlayGeometry) => void;
  onError?: (message: string) => void;
}

export class WorkbenchSession {
  readonly thresholds: ThresholdController;
  private fovs: FovSummary[] = [];
  private report: Report | null = null;

  private constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    initialThresholds: ThresholdValues,
    private readonly events: WorkbenchEvents,
  ) {
    this.thresholds = new ThresholdController({
      api,
      sessionId,
      initial: initialThresholds,
      onCommitted: () => void this.refreshAfterParamChange(),
      onInvalid: (msg) => events.onError?.(msg),
    });
  }

  static async create(api: ApiClient, events: WorkbenchEvents = {}, ruleTable = "breast"): Promise<WorkbenchSession> {
    const { session_id } = await api.createSession(ruleTable);
    const params = await api.getParams(session_id);
    const { t_weak, t_intense, d } = params.membrane;
    return new WorkbenchSession(api, session_id, { t_weak, t_intense, d }, events);
  }

  get fovList(): readonly FovSummary[] {
    return this.fovs;
  }

  get currentReport(): Report | null {
    return this.report;
  }

  async addFov(image: Blob, objective: string, heatmap?: Blob): Promise<FovSummary> {
    const summary = await this.api.addFov(this.sessionId, image, objective, heatmap);
    this.fovs.push(summary);
    this.events.onFovsChanged?.(this.fovs);
    await this.refreshReport();
    return summary;
  }

  async refreshReport(): Promise<Report> {
    this.report = await this.api.getReport(this.sessionId);
    this.events.onReportChanged?.(this.report);
    return this.report;
  }

  async refreshOverlay(fovId: string): Promise<OverlayGeometry> {
    const geometry = await this.api.getOverlay(this.sessionId, fovId);
    this.events.onOverlayChanged?.(fovId, geometry);
    return geometry;
  }

  /** After a threshold PATCH the service has reclassified every FOV. */
  private async refreshAfterParamChange(): Promise<void> {
    try {
      await this.refreshReport();
      for (const fov of this.fovs) await this.refreshOverlay(fov.fov_id);
    } catch (err) {
      this.events.onError?.(String(err));
    }
  }

  async setExclusions(fovId: string, polygons: [number, number][][]): Promise<void> {
    const summary = await this.api.setExclusions(this.sessionId, fovId, polygons);
    this.replaceFov(summary);
    await this.refreshReport();
    await this.refreshOverlay(fovId);
  }

  async setIncluded(fovId: string, included: boolean): Promise<void> {
    await this.api.setIncluded(this.sessionId, fovId, included);
    const fov = this.fovs.find((f) => f.fov_id === fovId);
    if (fov) {
      fov.included = included;
      this.events.onFovsChanged?.(this.fovs);
    }
    await this.refreshReport();
  }

  async overrideCell(fovId: string, index: number, cellClass: string | null): Promise<void> {
    const summary = await this.api.overrideCell(this.sessionId, fovId, index, cellClass);
    this.replaceFov(summary);
    await this.refreshReport();
    await this.refreshOverlay(fovId);
  }

  private replaceFov(summary: FovSummary): void {
    const i = this.fovs.findIndex((f) => f.fov_id === summary.fov_id);
    if (i >= 0) this.fovs[i] = summary;
    else this.fovs.push(summary);
    this.events.onFovsChanged?.(this.fovs);
  }
}
