// Admin uploader: pick page files (or give a server-side path), start the
// ingest job, poll its status every 2 s, and render the server-reported
// progress verbatim. Terminal states show the report or the failure cause.

import { ApiClient, ApiError } from "../api.js";
import { el, clear } from "../dom.js";
import { progressPercent } from "../state.js";
import type { IngestJob } from "../types.js";

const POLL_INTERVAL_MS = 2000;

export class UploaderView {
  private root: HTMLElement;
  private api: ApiClient;
  private statusBox: HTMLElement;
  private progressFill: HTMLElement;
  private progressLabel: HTMLElement;
  private resultBox: HTMLElement;
  private pollHandle: ReturnType<typeof setTimeout> | null = null;

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;
    this.statusBox = el("div", { class: "job-status", "data-role": "status" });
    this.progressFill = el("div", { class: "progress-fill" });
    this.progressLabel = el("span", { class: "progress-label", "data-role": "percent" });
    this.resultBox = el("div", { class: "job-result", "data-role": "result" });
    this.render();
  }

  private render(): void {
    clear(this.root);
    this.root.append(el("h2", {}, ["Add a guidebook"]));

    const tokenInput = el("input", {
      type: "password",
      placeholder: "Admin token",
      "data-role": "token",
    });
    tokenInput.value = localStorage.getItem("visitprep-admin-token") ?? "";
    const bookIdInput = el("input", { placeholder: "Book id (e.g. prostate-guide)" });
    const fileInput = el("input", { type: "file", multiple: "multiple" });
    const pathInput = el("input", { placeholder: "...or a folder path on the server" });
    const upload = el("button", { class: "primary", "data-action": "upload" }, [
      "Upload and index",
    ]);

    upload.addEventListener("click", async () => {
      this.api.adminToken = tokenInput.value.trim() || null;
      localStorage.setItem("visitprep-admin-token", tokenInput.value.trim());
      const bookId = bookIdInput.value.trim() || "uploaded-book";
      this.resultBox.textContent = "";
      try {
        let job: IngestJob;
        const files = Array.from(fileInput.files ?? []);
        if (files.length > 0) {
          job = await this.api.uploadBook(files, bookId);
        } else if (pathInput.value.trim()) {
          job = await this.api.ingestPath(pathInput.value.trim(), bookId);
        } else {
          this.statusBox.textContent = "Choose page files or enter a server path first.";
          return;
        }
        this.showJob(job);
        this.poll(job.job_id);
      } catch (error) {
        this.showError(error);
      }
    });

    const bar = el("div", { class: "progress-bar" }, [this.progressFill]);
    this.root.append(
      tokenInput,
      bookIdInput,
      fileInput,
      pathInput,
      upload,
      this.statusBox,
      bar,
      this.progressLabel,
      this.resultBox,
    );
  }

  /** Render one job snapshot; the bar shows the server's number verbatim. */
  showJob(job: IngestJob): void {
    this.statusBox.textContent = `${job.book_id}: ${job.status}`;
    const percent = progressPercent(job.progress);
    this.progressFill.style.width = percent;
    this.progressLabel.textContent = percent;
    if (job.status === "Done" && job.report) {
      this.resultBox.textContent =
        `Indexed ${job.report.segment_count} segments from ` +
        `${job.report.page_count} pages` +
        (job.report.failed_pages.length
          ? `; ${job.report.failed_pages.length} page(s) failed`
          : "") +
        (job.report.skipped_files.length
          ? `; skipped: ${job.report.skipped_files.join(", ")}`
          : "");
    } else if (job.status === "Failed") {
      this.resultBox.textContent = `Ingest failed: ${job.error ?? "unknown cause"}`;
    }
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError) {
      this.statusBox.textContent = `${error.code}: ${error.message}`;
    } else {
      this.statusBox.textContent = String(error);
    }
  }

  private poll(jobId: string): void {
    if (this.pollHandle) {
      clearTimeout(this.pollHandle);
    }
    const tick = async () => {
      try {
        const job = await this.api.getIngestJob(jobId);
        this.showJob(job);
        if (job.status !== "Done" && job.status !== "Failed") {
          this.pollHandle = setTimeout(tick, POLL_INTERVAL_MS);
        }
      } catch (error) {
        this.showError(error);
      }
    };
    this.pollHandle = setTimeout(tick, POLL_INTERVAL_MS);
  }
}
