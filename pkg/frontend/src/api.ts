// Thin typed client for the controller service; all trace logic stays
// server-side.

import type { AppConfigJson, JobResultJson, JobView, QueryFormState } from "./model.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function raiseForStatus(response: Response): Promise<Response> {
  if (response.ok) {
    return response;
  }
  let detail = response.statusText;
  try {
    const body = await response.json();
    detail = body.detail ?? body.error ?? detail;
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(response.status, String(detail));
}

export function buildQueryBody(form: QueryFormState): object {
  const params: Record<string, object> = {};
  if (form.searchTexts.length > 0) {
    params.PageContent = { searchTexts: form.searchTexts };
  }
  if (form.dictionaryFile) {
    params.Dns = { dictionaryFile: form.dictionaryFile };
  }
  return {
    target: form.target,
    httpPort: form.httpPort,
    httpsPort: form.httpsPort,
    traces: form.selectedKinds,
    params,
  };
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    return (await raiseForStatus(response)).json();
  }

  private async sendJson<T>(method: string, path: string, body: object): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await raiseForStatus(response)).json();
  }

  health(): Promise<{ status: string }> {
    return this.getJson("/api/health");
  }

  getConfig(): Promise<AppConfigJson> {
    return this.getJson("/api/config");
  }

  putConfig(config: AppConfigJson): Promise<AppConfigJson> {
    return this.sendJson("PUT", "/api/config", config);
  }

  async startQuery(form: QueryFormState): Promise<string> {
    const body = await this.sendJson<{ jobId: string }>("POST", "/api/query", buildQueryBody(form));
    return body.jobId;
  }

  getJob(jobId: string): Promise<JobView> {
    return this.getJson(`/api/query/${jobId}`);
  }

  getResult(jobId: string): Promise<JobResultJson> {
    return this.getJson(`/api/query/${jobId}/result`);
  }

  exportResult(jobId: string, path: string): Promise<{ path: string }> {
    return this.sendJson("POST", `/api/query/${jobId}/export`, { path });
  }
}
