// Visit question board: know-them (with answers and citations) next to
// ask-them ("bring this to your doctor"). Renders exactly the payload, plus a
// print button for the take-along one-pager.

import { el, clear } from "../dom.js";
import { boardModel, citationLabel } from "../state.js";
import type { Questions, SessionView } from "../types.js";

export function renderBoard(
  container: HTMLElement,
  view: SessionView,
  questions: Questions,
): void {
  clear(container);
  const model = boardModel(questions);
  container.append(el("h2", {}, ["Your visit preparation"]));

  const printButton = el("button", { class: "print-button", "data-action": "print" }, [
    "Print / save as PDF",
  ]);
  printButton.addEventListener("click", () => {
    document.body.classList.add("printing-board");
    window.print();
    document.body.classList.remove("printing-board");
  });
  container.append(printButton);

  const columns = el("div", { class: "board-columns" });

  const knowColumn = el("div", { class: "board-column know-them" }, [
    el("h3", {}, ["Questions you can already answer"]),
  ]);
  for (const q of model.knowThem) {
    knowColumn.append(
      el("article", { class: "question know-them-question" }, [
        el("p", { class: "question-text" }, [q.text]),
        el("p", { class: "question-answer" }, [q.answer]),
        el("p", { class: "citation" }, [
          "Sources: " + q.sources.map((sid) => citationLabel(view, sid)).join("; "),
        ]),
      ]),
    );
  }

  const askColumn = el("div", { class: "board-column ask-them" }, [
    el("h3", {}, ["Bring these to your doctor"]),
  ]);
  for (const q of model.askThem) {
    askColumn.append(
      el("article", { class: "question ask-them-question" }, [
        el("p", { class: "question-text" }, [q.text]),
        el("p", { class: "ask-framing" }, [
          "The guidebook does not answer this - a good one to raise at your visit.",
        ]),
      ]),
    );
  }

  columns.append(knowColumn, askColumn);
  container.append(columns);
}
