/** DOM rendering for the witness session. Pure view over the store. */

import { ViewState, WitnessSession } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function faceImg(pngB64: string, alt: string): HTMLImageElement {
  const img = el("img");
  img.src = `data:image/png;base64,${pngB64}`;
  img.alt = alt;
  img.draggable = false;
  return img;
}

export class WitnessView {
  private banner: HTMLElement;
  private grid: HTMLElement;
  private history: HTMLElement;
  private statusLine: HTMLElement;
  private submitButton: HTMLButtonElement;
  private retryButton: HTMLButtonElement;

  constructor(private root: HTMLElement, private session: WitnessSession) {
    this.banner = el("div", "banner");
    this.statusLine = el("div", "status");
    this.grid = el("div", "grid");
    this.history = el("div", "history");
    this.submitButton = el("button", "submit", "Next faces");
    this.submitButton.addEventListener("click", () => void session.submit());
    this.retryButton = el("button", "retry", "Retry");
    this.retryButton.addEventListener("click", () => void session.retry());

    const controls = el("div", "controls");
    controls.append(this.submitButton, this.retryButton);
    const historyBox = el("section", "history-box");
    historyBox.append(el("h2", undefined, "Faces you marked similar"));
    historyBox.append(this.history);
    root.append(this.banner, this.statusLine, this.grid, controls, historyBox);
    session.subscribe((state) => this.render(state));
  }

  private render(state: ViewState): void {
    this.banner.textContent = state.banner ?? "";
    this.banner.style.display = state.banner ? "block" : "none";
    this.retryButton.style.display = state.phase === "error" ? "inline" : "none";
    this.submitButton.disabled = state.busy || state.phase !== "awaiting_selection";

    const labels: Record<string, string> = {
      idle: "Not connected.",
      connecting: "Contacting the session service…",
      awaiting_selection:
        `Round ${state.t}: click every face that resembles the person; ` +
        "double-click the face if it IS the person.",
      converged: "Match declared — thank you.",
      exhausted: "The iteration budget is spent; start a new session to continue.",
      error: "Connection problem.",
    };
    this.statusLine.textContent = labels[state.phase] ?? state.phase;

    this.grid.replaceChildren();
    if (state.phase === "converged" && state.result) {
      const cell = el("figure", "result");
      cell.append(faceImg(state.result.png_b64, "final match"));
      cell.append(
        el(
          "figcaption",
          undefined,
          `final match after ${state.result.iterations} iterations`,
        ),
      );
      this.grid.append(cell);
    } else {
      for (const tile of state.grid) {
        const cell = el("figure", tile.selected ? "tile selected" : "tile");
        cell.append(faceImg(tile.pngB64, `candidate ${tile.id}`));
        cell.addEventListener("click", () => this.session.toggle(tile.id));
        cell.addEventListener("dblclick", () => {
          void this.session.submit(tile.id); // "this is the face"
        });
        this.grid.append(cell);
      }
    }

    this.history.replaceChildren();
    for (const face of state.history) {
      this.history.append(faceImg(face.pngB64, `accepted ${face.id}`));
    }
  }
}
