import type { Api } from "../api.js";
import type { Store } from "../store.js";
import type { Trace } from "../types.js";

const PHASES = ["", "reconnaissance", "exploitation", "delivery", "control"];

export interface LibraryCallbacks {
  onAdd(trace: Trace): void;
  onError(err: unknown): void;
}

/**
 * Left-hand trace library: searchable list with phase badges, a phase
 * filter, and a random-pick shortcut that drops straight onto the timeline.
 */
export class LibraryPanel {
  private listEl: HTMLElement;
  private searchEl: HTMLInputElement;
  private phaseEl: HTMLSelectElement;

  constructor(
    private root: HTMLElement,
    private api: Api,
    private store: Store,
    private callbacks: LibraryCallbacks,
  ) {
    root.innerHTML = `
      <h2>Trace library</h2>
      <div class="library-tools">
        <input type="search" class="trace-search" placeholder="search name or technique" />
        <select class="phase-filter">
          ${PHASES.map((p) => `<option value="${p}">${p || "all phases"}</option>`).join("")}
        </select>
        <button type="button" class="random-pick" title="pick a random trace of the selected phase">random</button>
      </div>
      <ul class="trace-list"></ul>
    `;
    this.listEl = root.querySelector(".trace-list") as HTMLElement;
    this.searchEl = root.querySelector(".trace-search") as HTMLInputElement;
    this.phaseEl = root.querySelector(".phase-filter") as HTMLSelectElement;

    this.searchEl.addEventListener("input", () => void this.reload());
    this.phaseEl.addEventListener("change", () => void this.reload());
    (root.querySelector(".random-pick") as HTMLButtonElement).addEventListener(
      "click",
      () => void this.pickRandom(),
    );

    store.subscribe(() => this.render());
    this.render();
  }

  /** Fetch traces with the current filters; the store holds the result. */
  async reload(): Promise<void> {
    try {
      const traces = await this.api.listTraces({
        q: this.searchEl.value || undefined,
        phase: this.phaseEl.value || undefined,
      });
      this.store.update((state) => {
        state.traces = traces;
        state.banner = null;
      });
    } catch (err) {
      this.callbacks.onError(err);
    }
  }

  private async pickRandom(): Promise<void> {
    const phase = this.phaseEl.value || "reconnaissance";
    try {
      const trace = await this.api.randomTrace(phase);
      this.callbacks.onAdd(trace);
    } catch (err) {
      this.callbacks.onError(err);
    }
  }

  private render(): void {
    const traces = this.store.state.traces;
    if (traces.length === 0) {
      this.listEl.innerHTML =
        '<li class="empty-state">no traces in the library</li>';
      return;
    }
    this.listEl.innerHTML = "";
    for (const trace of traces) {
      const item = document.createElement("li");
      item.className = "trace-row";
      item.dataset.traceId = trace.id;
      item.innerHTML = `
        <span class="badge phase-${trace.phase}">${trace.phase}</span>
        <span class="trace-name"></span>
        <span class="trace-meta">${trace.packet_count} pkts · ${trace.duration.toFixed(2)} s</span>
        <button type="button" class="add-trace">add</button>
      `;
      (item.querySelector(".trace-name") as HTMLElement).textContent = trace.name;
      (item.querySelector(".add-trace") as HTMLButtonElement).addEventListener(
        "click",
        () => this.callbacks.onAdd(trace),
      );
      this.listEl.appendChild(item);
    }
  }
}
