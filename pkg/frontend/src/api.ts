// Thin typed client over the session-service HTTP API. All state shown in
// the UI comes from these responses; nothing is decided client-side.

import type {
  CreateSessionResponse,
  IngestJob,
  Narrative,
  Panel,
  Questions,
  SessionView,
  ApiErrorBody,
} from "./types.js";

export class ApiError extends Error {
  code: string;
  status: number;
  details: Record<string, unknown>;
  retriable: boolean;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.details = body.details ?? {};
    this.retriable = body.retriable ?? false;
  }
}

export class ApiClient {
  baseUrl: string;
  adminToken: string | null;

  constructor(baseUrl = "", adminToken: string | null = null) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.adminToken = adminToken;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    admin = false,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    const init: RequestInit = { method, headers };
    if (body instanceof FormData) {
      init.body = body;
    } else if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    if (admin && this.adminToken) {
      headers["Authorization"] = `Bearer ${this.adminToken}`;
    }
    const response = await fetch(this.baseUrl + path, init);
    const data = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, data as ApiErrorBody);
    }
    return data as T;
  }

  createSession(): Promise<CreateSessionResponse> {
    return this.request("POST", "/api/sessions");
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  selectTopics(
    sessionId: string,
    topicIds: string[],
    otherLabel?: string,
  ): Promise<SessionView> {
    return this.request("POST", `/api/sessions/${sessionId}/topics`, {
      topic_ids: topicIds,
      other_label: otherLabel ?? null,
    });
  }

  submitResponse(sessionId: string, text: string): Promise<SessionView> {
    return this.request("POST", `/api/sessions/${sessionId}/responses`, { text });
  }

  getPanel(sessionId: string): Promise<Panel> {
    return this.request("GET", `/api/sessions/${sessionId}/panel`);
  }

  startReflection(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/api/sessions/${sessionId}/reflection`);
  }

  requestJourney(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/api/sessions/${sessionId}/journey`);
  }

  saveNarrative(sessionId: string, editedText: string): Promise<Narrative> {
    return this.request("PUT", `/api/sessions/${sessionId}/narrative`, {
      edited_text: editedText,
    });
  }

  confirmNarrative(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/api/sessions/${sessionId}/narrative/confirm`);
  }

  getQuestions(sessionId: string): Promise<Questions> {
    return this.request("GET", `/api/sessions/${sessionId}/questions`);
  }

  uploadBook(files: File[], bookId: string): Promise<IngestJob> {
    const form = new FormData();
    form.append("book_id", bookId);
    for (const file of files) {
      form.append("files", file, file.name);
    }
    return this.request("POST", "/api/admin/books", form, true);
  }

  ingestPath(path: string, bookId?: string): Promise<IngestJob> {
    return this.request(
      "POST",
      "/api/admin/books",
      { path, book_id: bookId ?? null },
      true,
    );
  }

  getIngestJob(jobId: string): Promise<IngestJob> {
    return this.request("GET", `/api/admin/ingest-jobs/${jobId}`, undefined, true);
  }
}
