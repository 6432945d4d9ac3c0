/** Typed client for the tutoring service JSON API. */

export interface ExerciseSummary {
  id: string;
  problem: string;
}

export interface TranscriptEntry {
  speaker: "student" | "system";
  text: string;
  kind: "problem" | "message" | "reply";
  timestamp: string;
}

export interface Snapshot {
  session_id: string;
  exercise_id: string;
  problem: string;
  phase: string;
  attempt_count: number;
  verdict: boolean | null;
  mcq_options: string[] | null;
  transcript: TranscriptEntry[];
}

export interface MessageResponse {
  reply: string;
  phase: string;
  verdict: boolean | null;
  attempt_count: number;
  mcq_options: string[] | null;
  feedback_kind: string | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}>;

async function errorDetail(response: {
  json(): Promise<unknown>;
  text(): Promise<string>;
  status: number;
}): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    if (body.detail !== undefined) return JSON.stringify(body.detail);
  } catch {
    // fall through to a generic message
  }
  return `request failed with status ${response.status}`;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    const fallback = globalThis.fetch as unknown as FetchLike | undefined;
    if (!fetchFn && !fallback) {
      throw new Error("no fetch implementation available");
    }
    this.fetchFn = fetchFn ?? fallback!.bind(globalThis);
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  async listExercises(): Promise<ExerciseSummary[]> {
    const body = await this.request<{ exercises: ExerciseSummary[] }>(
      "GET",
      "/exercises",
    );
    return body.exercises;
  }

  createSession(exerciseId: string): Promise<Snapshot> {
    return this.request<Snapshot>("POST", "/sessions", {
      exercise_id: exerciseId,
    });
  }

  getSession(sessionId: string): Promise<Snapshot> {
    return this.request<Snapshot>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request<MessageResponse>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/messages`,
      { text },
    );
  }
}

/**
 * Service base URL, resolved from the single configuration knob: a
 * `?service=` query parameter, falling back to a `<meta name="service-base">`
 * tag, falling back to the page's own origin.
 */
export function resolveBaseUrl(doc: Document, locationHref: string): string {
  const url = new URL(locationHref);
  const fromQuery = url.searchParams.get("service");
  if (fromQuery) return fromQuery;
  const meta = doc.querySelector('meta[name="service-base"]');
  const fromMeta = meta?.getAttribute("content");
  if (fromMeta) return fromMeta;
  return url.origin;
}
