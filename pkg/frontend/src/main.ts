// App bootstrap: hash routing between the patient interview (#/) and the
// admin uploader (#/admin). Every view is re-derived from server responses.

import { ApiClient, ApiError } from "./api.js";
import { el, clear } from "./dom.js";
import { ChatView } from "./views/chat.js";
import { renderBoard } from "./views/board.js";
import { renderEditor } from "./views/editor.js";
import { renderPanel } from "./views/panel.js";
import { UploaderView } from "./views/uploader.js";
import type { SessionView, Topic } from "./types.js";

const SESSION_KEY = "visitprep-session-id";

class PatientApp {
  private api: ApiClient;
  private view: SessionView | null = null;
  private chat: ChatView;
  private leftPane: HTMLElement;
  private warningBox: HTMLElement;

  constructor(root: HTMLElement, api: ApiClient) {
    this.api = api;
    clear(root);
    this.warningBox = el("div", { class: "tab-warning", hidden: "hidden" }, [
      "This session looks open in another tab. Use one tab at a time to avoid confusion.",
    ]);
    this.leftPane = el("section", { class: "left-pane" });
    const rightPane = el("section", { class: "right-pane" });
    root.append(this.warningBox, el("main", { class: "layout" }, [this.leftPane, rightPane]));
    this.chat = new ChatView(rightPane, {
      onSelectTopics: (ids, label) => this.run(() => this.api.selectTopics(this.sid(), ids, label)),
      onSendResponse: (text) => this.run(() => this.api.submitResponse(this.sid(), text)),
      onContinueToReflection: () => this.run(() => this.api.startReflection(this.sid())),
      onGenerateJourney: () => this.run(() => this.api.requestJourney(this.sid())),
    });
  }

  private sid(): string {
    if (!this.view) {
      throw new Error("no active session");
    }
    return this.view.session_id;
  }

  async start(): Promise<void> {
    const existing = localStorage.getItem(SESSION_KEY);
    if (existing) {
      try {
        this.apply(await this.api.getSession(existing));
        this.watchTabs(existing);
        return;
      } catch {
        localStorage.removeItem(SESSION_KEY);
      }
    }
    const created = await this.api.createSession();
    localStorage.setItem(SESSION_KEY, created.session_id);
    this.chat.renderTopics(created.topics as Topic[]);
    this.apply(await this.api.getSession(created.session_id));
    this.chat.renderTopics(created.topics as Topic[]);
    this.watchTabs(created.session_id);
  }

  private watchTabs(sessionId: string): void {
    if (typeof BroadcastChannel === "undefined") {
      return;
    }
    const channel = new BroadcastChannel(`visitprep-${sessionId}`);
    channel.addEventListener("message", (event) => {
      if (event.data === "hello") {
        channel.postMessage("occupied");
      }
      if (event.data === "occupied") {
        this.warningBox.removeAttribute("hidden");
      }
    });
    channel.postMessage("hello");
  }

  private async run(call: () => Promise<SessionView>): Promise<void> {
    this.chat.clearError();
    try {
      this.apply(await call());
    } catch (error) {
      if (error instanceof ApiError) {
        let message = `${error.code}: ${error.message}`;
        const unanswered = error.details["unanswered"];
        if (Array.isArray(unanswered) && unanswered.length) {
          message += ` Still to answer: ${unanswered.join(" | ")}`;
        }
        if (error.retriable) {
          message += " (you can try again)";
        }
        this.chat.showError(message);
      } else {
        this.chat.showError(String(error));
      }
    }
  }

  private apply(view: SessionView): void {
    this.view = view;
    this.chat.update(view);
    this.renderLeft(view);
  }

  private renderLeft(view: SessionView): void {
    if (view.questions) {
      renderBoard(this.leftPane, view, view.questions);
      return;
    }
    if (view.narrative && !view.narrative.confirmed) {
      renderEditor(this.leftPane, view.narrative, {
        onSave: async (text) => {
          try {
            const narrative = await this.api.saveNarrative(this.sid(), text);
            const fraction = this.leftPane.querySelector('[data-role="fraction"]');
            if (fraction) {
              fraction.textContent = `${(narrative.token_change_fraction * 100).toFixed(1)}% of tokens changed`;
            }
          } catch (error) {
            this.chat.showError(error instanceof ApiError ? error.message : String(error));
          }
        },
        onConfirm: () => this.run(() => this.api.confirmNarrative(this.sid())),
      });
      return;
    }
    renderPanel(this.leftPane, view);
  }
}

function route(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const api = new ApiClient("");
  if (location.hash.startsWith("#/admin")) {
    clear(root);
    const section = el("section", { class: "admin" });
    root.append(section);
    new UploaderView(section, api);
  } else {
    const app = new PatientApp(root, api);
    void app.start();
  }
}

window.addEventListener("hashchange", route);
route();
