/**
 * Typed client for the collection service HTTP API.
 *
 * Wire bodies must match the service schema exactly: outcome submissions
 * carry {task_id, idx, action, new_link?} and nothing else.
 */

export type Action = "verify" | "modify" | "remove";

export interface TaskAnnotation {
  idx: number;
  start: number;
  end: number;
  link: string;
}

export interface TaskPayload {
  task_id: string;
  text: string;
  annotations: TaskAnnotation[];
}

export interface OutcomeBody {
  task_id: string;
  idx: number;
  action: Action;
  new_link?: string;
}

export interface OutcomeAck {
  outcome_id: string;
  replaces: string | null;
}

export interface FinalizeResponse {
  status: "accepted" | "rejected";
  failed_controls: unknown[];
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function detailOf(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export class CollectClient {
  constructor(
    private readonly baseUrl: string,
    readonly assignmentId: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(suffix: string): string {
    return `${this.baseUrl}/api/assignment/${encodeURIComponent(this.assignmentId)}${suffix}`;
  }

  /** The next task with unanswered annotations, or null when the assignment is complete. */
  async nextTask(): Promise<TaskPayload | null> {
    const response = await this.fetchFn(this.url("/next"));
    if (!response.ok) throw new ApiError(await detailOf(response), response.status);
    const payload = (await response.json()) as TaskPayload & { complete?: boolean };
    if (payload.complete) return null;
    return payload;
  }

  async submitOutcome(body: OutcomeBody): Promise<OutcomeAck> {
    const response = await this.fetchFn(this.url("/outcome"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(await detailOf(response), response.status);
    return (await response.json()) as OutcomeAck;
  }

  async finalize(): Promise<FinalizeResponse> {
    const response = await this.fetchFn(this.url("/finalize"), { method: "POST" });
    if (!response.ok) throw new ApiError(await detailOf(response), response.status);
    return (await response.json()) as FinalizeResponse;
  }
}
