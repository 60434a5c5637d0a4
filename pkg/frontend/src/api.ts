import type {
  JobView,
  ScenarioDoc,
  SessionView,
  Trace,
  ValidationNote,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(status === 0 ? `backend unreachable: ${detail}` : `${status}: ${detail}`);
  }
}

export interface ApiOptions {
  baseUrl?: string;
  token?: string;
  fetchFn?: typeof fetch;
}

/** Thin typed client over the backend HTTP/JSON endpoints. */
export class Api {
  private baseUrl: string;
  private token?: string;
  private fetchFn: typeof fetch;

  constructor(options: ApiOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers = new Headers(init.headers);
    if (this.token) headers.set("Authorization", `Bearer ${this.token}`);
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.detail ?? body.error ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, String(detail));
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  private json<T>(path: string, method: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  listTraces(params: { phase?: string; q?: string } = {}): Promise<Trace[]> {
    const query = new URLSearchParams();
    if (params.phase) query.set("phase", params.phase);
    if (params.q) query.set("q", params.q);
    const suffix = query.toString() ? `?${query}` : "";
    return this.request<{ traces: Trace[] }>(`/traces${suffix}`).then(
      (body) => body.traces,
    );
  }

  randomTrace(phase: string, seed?: number): Promise<Trace> {
    const suffix = seed === undefined ? "" : `?seed=${seed}`;
    return this.request(`/traces/random/${phase}${suffix}`);
  }

  listScenarios(): Promise<ScenarioDoc[]> {
    return this.request<{ scenarios: ScenarioDoc[] }>("/scenarios").then(
      (body) => body.scenarios,
    );
  }

  getScenario(id: string): Promise<ScenarioDoc> {
    return this.request(`/scenarios/${id}`);
  }

  /** Upsert by id; the backend PUT stores the document as given. */
  saveScenario(doc: ScenarioDoc): Promise<ScenarioDoc> {
    return this.json(`/scenarios/${doc.id}`, "PUT", doc);
  }

  validateScenario(id: string): Promise<ValidationNote[]> {
    return this.request<{ notes: ValidationNote[] }>(
      `/scenarios/${id}/validate`,
    ).then((body) => body.notes);
  }

  assembleScenario(id: string): Promise<JobView> {
    return this.request(`/scenarios/${id}/assemble`, { method: "POST" });
  }

  job(id: string): Promise<JobView> {
    return this.request(`/jobs/${id}`);
  }

  startInjection(body: {
    scenario_id: string;
    sink: { kind: string; path?: string; interface?: string };
    scheduled_start?: string;
    background_ref?: string;
  }): Promise<SessionView> {
    return this.json("/injections", "POST", body);
  }

  injectionStatus(id: string): Promise<SessionView> {
    return this.request(`/injections/${id}`);
  }

  cancelInjection(id: string): Promise<SessionView> {
    return this.request(`/injections/${id}`, { method: "DELETE" });
  }
}
