import type {
  ClassificationInput,
  ClassificationRecord,
  Conflict,
  ExportCounts,
  PairDetail,
  QueueItem,
} from "./types.js";

/** Non-2xx response, with the service's error message when it sent one. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function asJson(response: Response): Promise<any> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, body.error ?? `HTTP ${response.status}`);
  }
  return body;
}

/**
 * Thin client over the triage service. `base` is "" when the UI is served
 * by the service itself; tests point it at an ephemeral host:port.
 */
export class TriageApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private get(path: string): Promise<any> {
    return this.fetchImpl(this.base + path).then(asJson);
  }

  private post(path: string, payload: unknown): Promise<any> {
    return this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    }).then(asJson);
  }

  async pairs(): Promise<string[]> {
    return (await this.get("/api/pairs")).pairs;
  }

  async pairDetail(pairId: string): Promise<PairDetail> {
    return this.get(`/api/pairs/${encodeURIComponent(pairId)}`);
  }

  /** Next pair missing this reviewer's record, or null when the queue is drained. */
  async nextUnclassified(reviewerId: string): Promise<QueueItem | null> {
    const body = await this.get(
      `/api/pairs?status=unclassified&reviewer=${encodeURIComponent(reviewerId)}`,
    );
    return body.queue_empty ? null : body;
  }

  async classify(pairId: string, input: ClassificationInput): Promise<ClassificationRecord> {
    const body = await this.post(
      `/api/pairs/${encodeURIComponent(pairId)}/classification`,
      input,
    );
    return body.stored;
  }

  async conflicts(): Promise<Conflict[]> {
    return (await this.get("/api/conflicts")).conflicts;
  }

  async resolve(pairId: string, input: ClassificationInput): Promise<Conflict> {
    const body = await this.post(
      `/api/conflicts/${encodeURIComponent(pairId)}/resolution`,
      input,
    );
    return body.resolved;
  }

  async exportCounts(): Promise<ExportCounts> {
    return this.get("/api/export");
  }
}
