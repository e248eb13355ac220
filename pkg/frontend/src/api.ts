import type {
  ApiErrorBody,
  ExplainRequest,
  ExplainResponse,
  ModelEntry,
  WhatIfRequest,
  WhatIfResponse,
} from "./types.js";

/** A non-2xx response, carrying the service's structured error body. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: ApiErrorBody["code"],
    message: string,
    readonly detail?: unknown,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class PricingClient {
  private readonly base: string;

  constructor(baseUrl: string, private readonly fetchFn: FetchLike = fetch) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, init);
    const body = await res.json();
    if (!res.ok) {
      const err = body as ApiErrorBody;
      throw new ServiceError(res.status, err.code ?? "internal", err.message ?? res.statusText, err.detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getModel(modelId: string): Promise<ModelEntry> {
    return this.request(`/models/${encodeURIComponent(modelId)}`);
  }

  explain(modelId: string, req: ExplainRequest): Promise<ExplainResponse> {
    return this.post(`/models/${encodeURIComponent(modelId)}/explain`, req);
  }

  whatIf(modelId: string, req: WhatIfRequest): Promise<WhatIfResponse> {
    return this.post(`/models/${encodeURIComponent(modelId)}/whatif`, req);
  }

  health(): Promise<{ status: string }> {
    return this.request(`/health`);
  }
}
