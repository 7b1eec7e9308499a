// Thin typed wrapper over the adjudication service API. Every call the UI
// makes goes through this module, so the set of endpoints the frontend can
// reach is exactly the set listed here.

export interface Candidate {
  pair_id: string;
  topic_a: string;
  topic_b: string;
  source: string;
  context: string;
  status: "pending" | "accepted" | "rejected";
}

export interface Progress {
  pending: number;
  accepted: number;
  rejected: number;
  total: number;
}

export type Decision = "accept" | "reject" | "skip";

export interface VerdictBody {
  pair_id: string;
  annotator: string;
  decision: Decision;
  note?: string | null;
}

// The slice of the fetch Response surface we actually touch. Keeping the
// dependency this narrow lets tests stub the transport without a DOM.
export interface MinimalResponse {
  status: number;
  ok: boolean;
  json(): Promise<unknown>;
}

export type FetchLike = (
  input: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  }
) => Promise<MinimalResponse>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly fetchFn: FetchLike, private readonly base = "") {}

  /** Next pending candidate for this annotator, or null when the queue is drained. */
  async nextCandidate(annotator: string): Promise<Candidate | null> {
    const url = `${this.base}/api/queue/next?annotator=${encodeURIComponent(annotator)}`;
    const res = await this.fetchFn(url);
    if (res.status === 204) {
      return null;
    }
    if (!res.ok) {
      throw new ApiError(res.status, `fetching next candidate failed (${res.status})`);
    }
    return (await res.json()) as Candidate;
  }

  /** Record a verdict; returns the pair's server-derived status. */
  async submitVerdict(body: VerdictBody): Promise<{ status: string }> {
    const res = await this.fetchFn(`${this.base}/api/verdicts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      throw new ApiError(res.status, `submitting verdict failed (${res.status})`);
    }
    return (await res.json()) as { status: string };
  }

  async progress(): Promise<Progress> {
    const res = await this.fetchFn(`${this.base}/api/progress`);
    if (!res.ok) {
      throw new ApiError(res.status, `fetching progress failed (${res.status})`);
    }
    return (await res.json()) as Progress;
  }
}
