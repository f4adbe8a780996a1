// Left-hand knowledge panel: background, cited factors, option grid.
// Cells the guidebook does not cover are visibly distinct.

import { el, clear } from "../dom.js";
import { citationLabel } from "../state.js";
import type { SessionView } from "../types.js";

const NOT_COVERED = "not covered in guidebook";

export function renderPanel(container: HTMLElement, view: SessionView): void {
  clear(container);
  const panel = view.panel;
  if (!panel) {
    container.append(
      el("p", { class: "panel-placeholder" }, [
        "The knowledge panel appears here once you have shared a little about where you stand.",
      ]),
    );
    return;
  }

  container.append(el("h2", {}, ["Knowledge panel"]));
  container.append(el("p", { class: "panel-background" }, [panel.background_summary]));

  container.append(el("h3", {}, ["Key points to consider"]));
  const factorList = el("ul", { class: "factor-list" });
  for (const factor of panel.decision_factors) {
    const sources = el("details", { class: "sources" }, [
      el("summary", {}, [`${factor.sources.length} source(s)`]),
      el(
        "ul",
        {},
        factor.sources.map((sid) => el("li", { class: "citation" }, [citationLabel(view, sid)])),
      ),
    ]);
    factorList.append(el("li", { class: "factor" }, [factor.text, sources]));
  }
  container.append(factorList);

  container.append(el("h3", {}, ["Comparing your options"]));
  const grid = panel.option_grid;
  const table = el("table", { class: "option-grid" });
  const header = el("tr", {}, [el("th", {}, ["Option"])]);
  for (const dimension of grid.dimensions) {
    header.append(el("th", {}, [dimension]));
  }
  table.append(header);
  const byPair = new Map(
    grid.cells.map((c) => [JSON.stringify([c.option, c.dimension]), c] as const),
  );
  for (const option of grid.options) {
    const row = el("tr", {}, [el("th", { class: "option-name" }, [option])]);
    for (const dimension of grid.dimensions) {
      const cell = byPair.get(JSON.stringify([option, dimension]));
      if (!cell || cell.text === NOT_COVERED) {
        row.append(el("td", { class: "cell not-covered" }, [NOT_COVERED]));
      } else {
        const cites = cell.sources.map((sid) => citationLabel(view, sid)).join("; ");
        row.append(
          el("td", { class: "cell" }, [
            cell.text,
            el("div", { class: "citation" }, [cites]),
          ]),
        );
      }
    }
    table.append(row);
  }
  container.append(table);
}
