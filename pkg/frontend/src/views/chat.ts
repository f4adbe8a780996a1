// Right-hand interview pane: topic chips, transcript, input, stage indicator.
// The transcript is append-only in the DOM so panel updates on the left never
// disturb the chat scroll position.

import { el, clear } from "../dom.js";
import { newEntries, reflectionStatus, responseInputEnabled, stageLabel } from "../state.js";
import type { SessionView, Topic, TranscriptEntry } from "../types.js";

export interface ChatCallbacks {
  onSelectTopics: (topicIds: string[], otherLabel?: string) => void;
  onSendResponse: (text: string) => void;
  onContinueToReflection: () => void;
  onGenerateJourney: () => void;
}

export class ChatView {
  private root: HTMLElement;
  private transcriptBox: HTMLElement;
  private stageBox: HTMLElement;
  private topicBox: HTMLElement;
  private controlsBox: HTMLElement;
  private errorBox: HTMLElement;
  private shownTurns = 0;
  private callbacks: ChatCallbacks;

  constructor(root: HTMLElement, callbacks: ChatCallbacks) {
    this.root = root;
    this.callbacks = callbacks;
    this.stageBox = el("div", { class: "stage-indicator" });
    this.transcriptBox = el("div", { class: "transcript", role: "log" });
    this.topicBox = el("div", { class: "topic-chips" });
    this.controlsBox = el("div", { class: "chat-controls" });
    this.errorBox = el("div", { class: "chat-error", hidden: "hidden" });
    root.append(this.stageBox, this.transcriptBox, this.topicBox, this.errorBox, this.controlsBox);
  }

  showError(message: string): void {
    this.errorBox.textContent = message;
    this.errorBox.removeAttribute("hidden");
  }

  clearError(): void {
    this.errorBox.textContent = "";
    this.errorBox.setAttribute("hidden", "hidden");
  }

  renderTopics(topics: Topic[]): void {
    clear(this.topicBox);
    const selected = new Set<string>();
    const otherInput = el("input", {
      class: "other-label",
      placeholder: "Describe your other concern (optional)",
      hidden: "hidden",
    });
    const chips = topics.map((topic) => {
      const chip = el("button", { class: "chip", "data-topic": topic.topic_id }, [
        topic.display_name,
      ]);
      chip.addEventListener("click", () => {
        if (selected.has(topic.topic_id)) {
          selected.delete(topic.topic_id);
          chip.classList.remove("chip-selected");
        } else {
          selected.add(topic.topic_id);
          chip.classList.add("chip-selected");
        }
        if (topic.topic_id === "other_concerns") {
          otherInput.toggleAttribute("hidden", !selected.has("other_concerns"));
        }
      });
      return chip;
    });
    const confirm = el("button", { class: "primary", "data-action": "confirm-topics" }, [
      "Start with these topics",
    ]);
    confirm.addEventListener("click", () => {
      this.callbacks.onSelectTopics(
        [...selected],
        otherInput.value.trim() || undefined,
      );
    });
    this.topicBox.append(...chips, otherInput, confirm);
  }

  hideTopics(): void {
    clear(this.topicBox);
  }

  private appendEntry(entry: TranscriptEntry): void {
    const cls = entry.speaker === "System" ? "turn turn-system" : "turn turn-patient";
    const bubble = el("div", { class: cls }, [entry.text]);
    this.transcriptBox.append(bubble);
    this.transcriptBox.scrollTop = this.transcriptBox.scrollHeight;
  }

  update(view: SessionView): void {
    this.stageBox.textContent = stageLabel(view.stage);
    for (const entry of newEntries(view.transcript, this.shownTurns)) {
      this.appendEntry(entry);
    }
    this.shownTurns = view.transcript.length;
    if (view.stage !== "TopicSelection") {
      this.hideTopics();
    }
    this.renderControls(view);
  }

  private renderControls(view: SessionView): void {
    clear(this.controlsBox);
    const input = el("textarea", {
      class: "response-input",
      placeholder: "Type your answer...",
      rows: "2",
    });
    const send = el("button", { class: "primary", "data-action": "send" }, ["Send"]);
    const enabled = responseInputEnabled(view);
    if (!enabled) {
      input.setAttribute("disabled", "disabled");
      send.setAttribute("disabled", "disabled");
    }
    send.addEventListener("click", () => {
      const text = input.value.trim();
      if (text) {
        input.value = "";
        this.callbacks.onSendResponse(text);
      }
    });
    this.controlsBox.append(input, send);

    if (view.stage === "ReviewKnowledge") {
      const cont = el("button", { "data-action": "reflection" }, [
        "I reviewed the panel - continue",
      ]);
      cont.addEventListener("click", () => this.callbacks.onContinueToReflection());
      this.controlsBox.append(cont);
    }
    if (view.stage === "Reflection") {
      const status = reflectionStatus(view);
      const journey = el("button", { "data-action": "journey" }, [
        `Generate My Journey (${status.answered}/${status.total} answered)`,
      ]);
      // clickable regardless of completeness: the server enforces the gate
      journey.addEventListener("click", () => this.callbacks.onGenerateJourney());
      this.controlsBox.append(journey);
    }
  }
}
