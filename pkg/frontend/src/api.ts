// Thin typed client over fetch. Configuration is limited to the API base URL;
// a custom fetch can be injected for tests.

import type {
  AgreementReportView,
  AnnotationSubmission,
  ArticleView,
  CaseView,
  Table5View,
  TaskView,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface SubmitResult {
  ok: boolean;
  status: number;
  /** server-side validation message, verbatim, when ok is false */
  detail?: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.url(path));
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
    return (await response.json()) as T;
  }

  listArticles(): Promise<ArticleView[]> {
    return this.getJson("/articles");
  }

  getArticle(id: string): Promise<ArticleView> {
    return this.getJson(`/articles/${encodeURIComponent(id)}`);
  }

  /** Next unanswered cell for the annotator, or null when the queue is empty. */
  async nextTask(annotatorId: string): Promise<TaskView | null> {
    const response = await this.fetchImpl(this.url(`/tasks/${encodeURIComponent(annotatorId)}/next`));
    if (response.status === 404) {
      const detail = await detailOf(response);
      if (detail.includes("QUEUE_EMPTY")) return null;
      throw new ApiError(404, detail);
    }
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
    return (await response.json()) as TaskView;
  }

  /** POST an answer; validation failures come back as {ok:false, detail}. */
  async submitAnnotation(payload: AnnotationSubmission): Promise<SubmitResult> {
    const response = await this.fetchImpl(this.url("/annotations"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (response.ok) return { ok: true, status: response.status };
    return { ok: false, status: response.status, detail: await detailOf(response) };
  }

  /** Agreement report, or null when the server has none for this selection. */
  async agreement(criterion: string, version: string): Promise<AgreementReportView | null> {
    const response = await this.fetchImpl(
      this.url(`/agreement?criterion=${encodeURIComponent(criterion)}&version=${encodeURIComponent(version)}`),
    );
    if (response.status === 404) return null;
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
    return (await response.json()) as AgreementReportView;
  }

  adjudicationQueue(): Promise<CaseView[]> {
    return this.getJson("/adjudication/queue");
  }

  async resolveCase(
    caseId: string,
    body: { ground_truth?: string | null; indeterminate?: boolean; adjudicator: string },
  ): Promise<SubmitResult> {
    const response = await this.fetchImpl(this.url(`/adjudication/${encodeURIComponent(caseId)}`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (response.ok) return { ok: true, status: response.status };
    return { ok: false, status: response.status, detail: await detailOf(response) };
  }

  table5(): Promise<Table5View> {
    return this.getJson("/summary/table5");
  }
}
