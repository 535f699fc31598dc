/** Typed client for the session service; every displayed value originates
 * from one of these responses (the UI never computes classes or scores). */

import type {
  FovSummary,
  MembraneParamsPatch,
  OverlayGeometry,
  Report,
  SessionParams,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ApiOptions {
  baseUrl: string;
  token?: string;
  fetchFn?: FetchLike;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchFn: FetchLike;

  constructor(opts: ApiOptions) {
    this.baseUrl = opts.baseUrl.replace(/\/+$/, "");
    this.token = opts.token;
    this.fetchFn = opts.fetchFn ?? ((url, init) => fetch(url, init));
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["content-type"] = "application/json";
    if (this.token) h["authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown, form?: FormData): Promise<T> {
    const init: RequestInit = { method, headers: this.headers(body !== undefined) };
    if (form !== undefined) init.body = form;
    else if (body !== undefined) init.body = JSON.stringify(body);
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const parsed = (await res.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  createSession(ruleTable = "breast"): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", { rule_table: ruleTable });
  }

  addFov(sid: string, image: Blob, objective: string, heatmap?: Blob): Promise<FovSummary> {
    const form = new FormData();
    form.append("image", image);
    form.append("objective", objective);
    if (heatmap) form.append("heatmap", heatmap);
    return this.request("POST", `/sessions/${sid}/fovs`, undefined, form);
  }

  getParams(sid: string): Promise<SessionParams> {
    return this.request("GET", `/sessions/${sid}/params`);
  }

  patchMembraneParams(sid: string, patch: MembraneParamsPatch): Promise<unknown> {
    return this.request("PATCH", `/sessions/${sid}/params`, { membrane: patch });
  }

  setExclusions(sid: string, fid: string, polygons: [number, number][][]): Promise<FovSummary> {
    return this.request("PUT", `/sessions/${sid}/fovs/${fid}/exclusions`, { polygons });
  }

  setIncluded(sid: string, fid: string, included: boolean): Promise<unknown> {
    return this.request("PUT", `/sessions/${sid}/fovs/${fid}/included`, { included });
  }

  overrideCell(sid: string, fid: string, index: number, cellClass: string | null): Promise<FovSummary> {
    return this.request("PUT", `/sessions/${sid}/fovs/${fid}/cells/${index}/class`, {
      cell_class: cellClass,
    });
  }

  getReport(sid: string): Promise<Report> {
    return this.request("GET", `/sessions/${sid}/report`);
  }

  getOverlay(sid: string, fid: string): Promise<OverlayGeometry> {
    return this.request("GET", `/sessions/${sid}/fovs/${fid}/overlay?format=json`);
  }

  overlayPngUrl(sid: string, fid: string): string {
    return `${this.baseUrl}/sessions/${sid}/fovs/${fid}/overlay?format=png`;
  }
}
