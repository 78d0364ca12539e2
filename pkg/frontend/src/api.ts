import type {
  CompositionResponse,
  ConfigDoc,
  ErrorEnvelope,
  HealthResponse,
  MutationResponse,
  SimulateResponse,
  TopologyDoc,
  WorkloadRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface SimulateRequest {
  workload: string;
  label?: string;
  strategy?: { parallelism?: string; precision?: string; sharded?: boolean };
  record_steps?: number;
}

export type CompositionAction =
  | { action: "attach"; device: string; host: string; user?: string }
  | { action: "detach"; device: string }
  | { action: "mode"; drawer: string; mode: string }
  | { action: "apply"; label: string; host?: string };

/** Thin typed client for the control service's /v1 HTTP API. */
export class ApiClient {
  constructor(
    readonly base: string = "",
    public token: string = "",
  ) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.base + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      let code = "HTTP_ERROR";
      let message = `${res.status} on ${path}`;
      try {
        const payload = (await res.json()) as ErrorEnvelope;
        code = payload.error.code;
        message = payload.error.message;
      } catch {
        // non-JSON error body; keep the generic description
      }
      throw new ApiError(res.status, code, message);
    }
    return (await res.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/v1/health");
  }

  topology(): Promise<{ topology: TopologyDoc }> {
    return this.request("GET", "/v1/topology");
  }

  workloads(): Promise<{ workloads: WorkloadRow[] }> {
    return this.request("GET", "/v1/workloads");
  }

  composition(): Promise<CompositionResponse> {
    return this.request("GET", "/v1/composition");
  }

  mutate(action: CompositionAction): Promise<MutationResponse> {
    return this.request("POST", "/v1/composition", action);
  }

  importConfig(doc: ConfigDoc): Promise<MutationResponse> {
    return this.request("POST", "/v1/composition/import", doc);
  }

  exportConfig(): Promise<ConfigDoc> {
    return this.request("GET", "/v1/composition/export");
  }

  simulate(body: SimulateRequest): Promise<SimulateResponse> {
    return this.request("POST", "/v1/simulate", body);
  }

  /** Admin-only; the service answers 403 FORBIDDEN for USER principals. */
  async exportEvents(format: "text" | "csv"): Promise<string> {
    const res = await fetch(`${this.base}/v1/events?format=${format}`, {
      headers: this.headers(),
    });
    if (!res.ok) {
      let code = "HTTP_ERROR";
      let message = `${res.status} on /v1/events`;
      try {
        const payload = (await res.json()) as ErrorEnvelope;
        code = payload.error.code;
        message = payload.error.message;
      } catch {
        // fall through with the generic description
      }
      throw new ApiError(res.status, code, message);
    }
    return await res.text();
  }
}
