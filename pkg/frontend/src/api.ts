/**
 * Typed client for the session-service HTTP API.
 *
 * The service serves blinded task payloads (task_id, kind, text,
 * date_ordinal) and accepts decision submissions. Everything except
 * `GET /api/config` may require a bearer token. `fetch` is injectable so
 * tests and the offline queue can control connectivity.
 */

export interface ApiConfig {
  title: string;
  closed: boolean;
  n_tasks: number;
}

export interface TickerEntry {
  code: string;
  name: string;
}

export interface Task {
  task_id: string;
  kind: string;
  text: string;
  date_ordinal: number;
}

export interface DecisionPayload {
  buys: string[];
  sells: string[];
  remark: string;
}

export interface Progress {
  annotator_id: string;
  completed: number;
  total: number;
  n_scored?: number;
  accuracy?: number | null;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A response the server returned with a non-2xx status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

export interface SessionApiOptions {
  token?: string;
  fetchFn?: FetchLike;
}

export interface SessionApiLike {
  config(): Promise<ApiConfig>;
  universe(): Promise<TickerEntry[]>;
  nextTask(): Promise<Task | null>;
  submit(taskId: string, payload: DecisionPayload): Promise<void>;
  progress(): Promise<Progress>;
}

export class SessionApi implements SessionApiLike {
  private readonly fetchFn: FetchLike;
  private readonly token: string | undefined;

  constructor(
    readonly baseUrl: string,
    readonly annotatorId: string,
    options: SessionApiOptions = {},
  ) {
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? ((input, init) => fetch(input, init));
  }

  private headers(hasBody: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (hasBody) {
      headers['Content-Type'] = 'application/json';
    }
    if (this.token !== undefined) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body: unknown = await response.json();
        if (
          typeof body === 'object' &&
          body !== null &&
          typeof (body as { detail?: unknown }).detail === 'string'
        ) {
          detail = (body as { detail: string }).detail;
        }
      } catch {
        // Non-JSON error body; fall back to the bare status.
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  config(): Promise<ApiConfig> {
    return this.request<ApiConfig>('/api/config');
  }

  universe(): Promise<TickerEntry[]> {
    return this.request<TickerEntry[]>('/api/universe', { headers: this.headers(false) });
  }

  async nextTask(): Promise<Task | null> {
    const body = await this.request<Task | { done: true }>(
      `/api/annotators/${encodeURIComponent(this.annotatorId)}/next-task`,
      { headers: this.headers(false) },
    );
    if ('done' in body) {
      return null;
    }
    return body;
  }

  async submit(taskId: string, payload: DecisionPayload): Promise<void> {
    await this.request<{ accepted: boolean }>(
      `/api/annotators/${encodeURIComponent(this.annotatorId)}/tasks/${encodeURIComponent(taskId)}/decisions`,
      {
        method: 'POST',
        headers: this.headers(true),
        body: JSON.stringify(payload),
      },
    );
  }

  progress(): Promise<Progress> {
    return this.request<Progress>(
      `/api/annotators/${encodeURIComponent(this.annotatorId)}/progress`,
      { headers: this.headers(false) },
    );
  }
}
