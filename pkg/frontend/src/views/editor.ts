// Plain-text journey editor. Save round-trips through the server, which is
// the only place the token-change fraction is computed.

import { el, clear } from "../dom.js";
import { formatFraction } from "../state.js";
import type { Narrative } from "../types.js";

export interface EditorCallbacks {
  onSave: (text: string) => void;
  onConfirm: () => void;
}

export function renderEditor(
  container: HTMLElement,
  narrative: Narrative,
  callbacks: EditorCallbacks,
): void {
  clear(container);
  container.append(el("h2", {}, ["Your journey, in your words"]));
  const textarea = el("textarea", { class: "narrative-editor", rows: "12" });
  textarea.value = narrative.edited_text;
  const fraction = el("div", { class: "edit-fraction", "data-role": "fraction" }, [
    formatFraction(narrative.token_change_fraction),
  ]);
  const save = el("button", { "data-action": "save-narrative" }, ["Save edits"]);
  save.addEventListener("click", () => callbacks.onSave(textarea.value));
  const confirm = el("button", { class: "primary", "data-action": "confirm-narrative" }, [
    "This sounds like me - confirm",
  ]);
  confirm.addEventListener("click", () => callbacks.onConfirm());
  if (narrative.confirmed) {
    textarea.setAttribute("disabled", "disabled");
    save.setAttribute("disabled", "disabled");
    confirm.setAttribute("disabled", "disabled");
  }
  container.append(textarea, fraction, save, confirm);
}
