import type { SessionCreated, SessionResult, SessionState } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed wrapper over the session service endpoints.
 *
 * A `fetch` implementation can be injected for tests; the base URL comes
 * from the build environment (see app.ts). `answer` stamps the question's
 * step so a duplicated submit is rejected by the service (409) instead of
 * charging the budget twice.
 */
export class SessionClient {
  private inFlight = false;

  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const text = await resp.text();
    if (!resp.ok) {
      throw new ApiError(resp.status, text || resp.statusText);
    }
    return JSON.parse(text) as T;
  }

  createSession(body: unknown): Promise<SessionCreated> {
    return this.request<SessionCreated>("/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  next(id: string): Promise<SessionState> {
    return this.request<SessionState>(`/sessions/${id}/next`);
  }

  /** Submit one answer; concurrent submits are refused locally so a
   * double-click can never produce two requests. */
  async answer(id: string, value: number, step: number): Promise<SessionState> {
    if (this.inFlight) {
      throw new ApiError(0, "an answer is already in flight");
    }
    this.inFlight = true;
    try {
      return await this.request<SessionState>(`/sessions/${id}/answer`, {
        method: "POST",
        body: JSON.stringify({ answer: value, step }),
      });
    } finally {
      this.inFlight = false;
    }
  }

  result(id: string): Promise<SessionResult> {
    return this.request<SessionResult>(`/sessions/${id}/result`);
  }
}
