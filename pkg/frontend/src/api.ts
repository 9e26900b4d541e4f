/** Typed client for the curation API under /api/v1.
 *
 * Every function hits the HTTP interface; nothing reads run-directory
 * files directly, so the UI works against any server that speaks the
 * same routes. The fetch implementation is injectable for tests.
 */

export interface KeywordEntry {
  keyword: string;
  score: number;
}

export interface TopicSummary {
  topic_id: number;
  size: number;
  yearly_counts: Record<string, number>;
  keywords: Record<string, KeywordEntry[]>;
  selected: boolean;
  note: string;
  updated_at: string | null;
}

export interface SelectionState {
  topic_id: number;
  selected: boolean;
  note: string;
  updated_at: string | null;
}

export interface Merge {
  node_a: number;
  node_b: number;
  height: number;
  new_node: number;
}

export interface Dendrogram {
  merges: Merge[];
}

export type JobState = "queued" | "running" | "completed" | "failed";

export interface JobStatus {
  job_id: string;
  state: JobState;
  progress: number;
  counts: Record<string, number>;
  topic_ids: number[];
  error: string | null;
  submitted_at: string;
  started_at: string | null;
  finished_at: string | null;
}

export interface PatentRow {
  patent_id: string;
  distance: number;
  hit_count: number;
}

export interface PatentPage {
  topic_id: number;
  total: number;
  items: PatentRow[];
}

export interface PatentQuery {
  maxDistance?: number;
  limit?: number;
  offset?: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = await response.json();
        detail = body.detail ?? body.error ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, String(detail));
    }
    return (await response.json()) as T;
  }

  listTopics(): Promise<TopicSummary[]> {
    return this.request("/api/v1/topics");
  }

  getTopic(topicId: number): Promise<TopicSummary> {
    return this.request(`/api/v1/topics/${topicId}`);
  }

  patchSelection(
    topicId: number,
    patch: { selected?: boolean; note?: string },
  ): Promise<SelectionState> {
    return this.request(`/api/v1/topics/${topicId}/selection`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  getDendrogram(): Promise<Dendrogram> {
    return this.request("/api/v1/dendrogram");
  }

  runSearch(body: {
    topic_ids?: number[];
    k?: number;
    seed?: number;
  }): Promise<{ job_id: string }> {
    return this.request("/api/v1/search/run", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request(`/api/v1/jobs/${jobId}`);
  }

  getPatents(topicId: number, query: PatentQuery = {}): Promise<PatentPage> {
    const params = new URLSearchParams();
    if (query.maxDistance !== undefined) {
      params.set("max_distance", String(query.maxDistance));
    }
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    if (query.offset !== undefined) params.set("offset", String(query.offset));
    const suffix = params.size > 0 ? `?${params.toString()}` : "";
    return this.request(`/api/v1/topics/${topicId}/patents${suffix}`);
  }

  getAnalytics<T = unknown>(table: string): Promise<T> {
    return this.request(`/api/v1/analytics/${table}`);
  }
}
