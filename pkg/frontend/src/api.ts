import type {
  CreateSessionResponse,
  GraphDoc,
  SessionState,
  UtteranceResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(message: string, public status: number | null = null) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private base: string = '',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.base}${path}`, {
        method,
        headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(`cannot reach server: ${(err as Error).message}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(detail, response.status);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  createSession(): Promise<CreateSessionResponse> {
    return this.request('POST', '/api/sessions');
  }

  sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    return this.request('POST', `/api/sessions/${sessionId}/utterance`, { text });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request('GET', `/api/sessions/${sessionId}/state`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request('DELETE', `/api/sessions/${sessionId}`);
  }

  getGraph(): Promise<GraphDoc> {
    return this.request('GET', '/api/graph');
  }
}
