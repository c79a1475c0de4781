/**
 * Thin typed client for the annotation API. Every method maps to one
 * endpoint; non-2xx responses become ApiError with the parsed body so
 * callers can show 409/422 details without losing their own state.
 */

import type {
  Article,
  ArticleSummary,
  FeaturesBody,
  SchemaPayload,
  SessionPayload,
  TreePayload,
  Violation,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
    public readonly violations: Violation[] = [],
  ) {
    super(`${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  let violations: Violation[] = [];
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
    if (Array.isArray(body.violations)) {
      violations = body.violations;
      detail = "validation failed";
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail, violations);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  getTree(): Promise<TreePayload> {
    return this.request("/api/tree");
  }

  getSchema(): Promise<SchemaPayload> {
    return this.request("/api/schema");
  }

  listArticles(status?: string): Promise<ArticleSummary[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request(`/api/articles${suffix}`);
  }

  getArticle(articleId: string): Promise<Article> {
    return this.request(`/api/articles/${encodeURIComponent(articleId)}`);
  }

  getSession(articleId: string): Promise<SessionPayload> {
    return this.request(`/api/articles/${encodeURIComponent(articleId)}/session`);
  }

  postAnswer(articleId: string, nodeId: string, answer: "yes" | "no"): Promise<SessionPayload> {
    return this.request(`/api/articles/${encodeURIComponent(articleId)}/answers`, {
      method: "POST",
      body: JSON.stringify({ node_id: nodeId, answer }),
    });
  }

  postFeatures(articleId: string, body: FeaturesBody): Promise<{ incident_id: string }> {
    return this.request(`/api/articles/${encodeURIComponent(articleId)}/features`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  complete(articleId: string): Promise<SessionPayload> {
    return this.request(`/api/articles/${encodeURIComponent(articleId)}/complete`, {
      method: "POST",
    });
  }

  exportIncidentsUrl(): string {
    return `${this.base}/api/export/incidents`;
  }
}
