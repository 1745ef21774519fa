import type {
  ApiErrorBody,
  DvlEntry,
  DvlSpec,
  ExprCheckResult,
  JobStatus,
  RecodeRequest,
  RowAdded,
  SessionInfo,
  ValidationReport,
  VariableSummary,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  code: string;
  location?: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.location = body.location;
  }
}

type Fetch = typeof fetch;

/** Thin typed client over the harmonize HTTP API. The fetch implementation
 * is injectable so tests can run without a server. */
export class HarmonizeClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: Fetch = fetch.bind(globalThis),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let body: ApiErrorBody;
      try {
        body = await resp.json();
      } catch {
        body = { code: "HttpError", message: resp.statusText };
      }
      throw new ApiError(resp.status, body);
    }
    return resp;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json();
  }

  private postJson<T>(path: string, payload: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  openSession(body: {
    format: string;
    location?: string;
    content?: string;
    table?: string;
    name?: string;
  }): Promise<SessionInfo> {
    return this.postJson("/sessions", body);
  }

  summary(sessionId: string, column: string, k?: number): Promise<VariableSummary> {
    const query = k === undefined ? "" : `?k=${k}`;
    return this.json(
      `/sessions/${sessionId}/summary/${encodeURIComponent(column)}${query}`,
    );
  }

  async getSheet(sessionId: string, which: "variables" | "details"): Promise<string> {
    const resp = await this.request(`/sessions/${sessionId}/sheets/${which}`);
    return resp.text();
  }

  async putSheet(
    sessionId: string,
    which: "variables" | "details",
    csvText: string,
  ): Promise<ValidationReport> {
    const body = await this.json<{ report: ValidationReport }>(
      `/sessions/${sessionId}/sheets/${which}`,
      { method: "PUT", headers: { "content-type": "text/csv" }, body: csvText },
    );
    return body.report;
  }

  addDetailsRow(sessionId: string, rowSpec: Record<string, string>): Promise<RowAdded> {
    return this.postJson(`/sessions/${sessionId}/details-rows`, { rowSpec });
  }

  /** Row numbers are 1-based; 0 deletes nothing, matching the wizard's
   * "enter 0 to keep everything" convention. */
  deleteDetailsRow(
    sessionId: string,
    index: number,
  ): Promise<{ rows: number; report: ValidationReport }> {
    return this.json(`/sessions/${sessionId}/details-rows/${index}`, {
      method: "DELETE",
    });
  }

  async startRecode(sessionId: string, body: RecodeRequest): Promise<string> {
    const reply = await this.postJson<{ jobId: string }>(
      `/sessions/${sessionId}/recode`,
      body,
    );
    return reply.jobId;
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.json(`/jobs/${jobId}`);
  }

  /** Poll until the job settles. Resolves with the final status either way;
   * the caller decides how to surface an error state. */
  async waitForJob(
    jobId: string,
    onProgress?: (status: JobStatus) => void,
    intervalMs = 500,
  ): Promise<JobStatus> {
    for (;;) {
      const status = await this.jobStatus(jobId);
      onProgress?.(status);
      if (status.state === "done" || status.state === "error") {
        return status;
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  async jobResult(jobId: string): Promise<Blob> {
    const resp = await this.request(`/jobs/${jobId}/result`);
    return resp.blob();
  }

  async derivedDoc(sessionId: string): Promise<string> {
    const resp = await this.request(`/sessions/${sessionId}/derived-doc`);
    return resp.text();
  }

  addDvl(spec: DvlSpec): Promise<{ name: string; contentHash: string }> {
    return this.postJson("/dvl", spec);
  }

  async dvlCatalog(): Promise<DvlEntry[]> {
    const body = await this.json<{ entries: DvlEntry[] }>("/dvl");
    return body.entries;
  }

  checkExpression(
    body: string,
    componentTypes?: Record<string, string>,
  ): Promise<ExprCheckResult> {
    return this.postJson("/expressions/check", {
      body,
      componentTypes: componentTypes ?? {},
    });
  }

  async health(): Promise<{ status: string; version: string }> {
    return this.json("/health");
  }
}
