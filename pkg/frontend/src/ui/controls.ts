import type { Api } from "../api.js";
import type { InjectionController } from "../injection.js";
import { draftFromScenario, serializeDraft, validateDraft } from "../scenario.js";
import type { Store } from "../store.js";

export interface ControlCallbacks {
  onError(err: unknown): void;
}

/**
 * Top-right controls: name/save/load for experiments, and the injection
 * lifecycle (start now, schedule, stop) with a live state badge and a
 * countdown while scheduled.
 */
export class ControlsPanel {
  private countdownTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private root: HTMLElement,
    private api: Api,
    private store: Store,
    private injection: InjectionController,
    private callbacks: ControlCallbacks,
  ) {
    root.innerHTML = `
      <h2>Experiment</h2>
      <div class="experiment-row">
        <input class="scenario-name" placeholder="experiment name" />
        <button type="button" class="save-scenario">save</button>
        <select class="scenario-select"><option value="">load…</option></select>
      </div>
      <div class="experiment-row">
        <label>sink
          <select class="sink-kind">
            <option value="file">pcap file</option>
            <option value="interface">interface</option>
            <option value="discard">dry run (discard)</option>
          </select>
        </label>
        <input class="sink-target" placeholder="/tmp/replay.pcap" />
      </div>
      <div class="experiment-row">
        <button type="button" class="start-injection">start</button>
        <input class="schedule-at" type="datetime-local" step="1" />
        <button type="button" class="schedule-injection">schedule</button>
        <button type="button" class="stop-injection">stop</button>
      </div>
      <div class="session-row">
        <span class="state-badge" hidden></span>
        <span class="countdown" hidden></span>
        <span class="session-progress" hidden></span>
      </div>
      <div class="notice" hidden></div>
    `;
    this.wire();
    store.subscribe(() => this.render());
    this.render();
  }

  private el<T extends HTMLElement>(selector: string): T {
    return this.root.querySelector(selector) as T;
  }

  private wire(): void {
    this.el<HTMLInputElement>(".scenario-name").addEventListener("change", (e) => {
      const value = (e.target as HTMLInputElement).value;
      this.store.update((state) => {
        state.draft = { ...state.draft, name: value };
      });
    });
    this.el<HTMLButtonElement>(".save-scenario").addEventListener("click", () =>
      void this.save(),
    );
    this.el<HTMLSelectElement>(".scenario-select").addEventListener("change", (e) => {
      const id = (e.target as HTMLSelectElement).value;
      if (id) void this.load(id);
    });
    this.el<HTMLButtonElement>(".start-injection").addEventListener("click", () =>
      void this.startInjection(),
    );
    this.el<HTMLButtonElement>(".schedule-injection").addEventListener("click", () =>
      void this.startInjection(this.el<HTMLInputElement>(".schedule-at").value),
    );
    this.el<HTMLButtonElement>(".stop-injection").addEventListener("click", () =>
      void this.injection.stop().catch((err) => this.callbacks.onError(err)),
    );
  }

  /** Persist the draft; the backend copy is the only authoritative one. */
  async save(): Promise<string | null> {
    const problems = validateDraft(this.store.state.draft);
    if (problems.length) {
      this.store.update((state) => {
        state.inlineError = problems.join("; ");
      });
      return null;
    }
    let draft = this.store.state.draft;
    if (!draft.id) {
      draft = { ...draft, id: randomId() };
      this.store.update((state) => {
        state.draft = draft;
      });
    }
    try {
      const saved = await this.api.saveScenario(serializeDraft(draft));
      const scenarios = await this.api.listScenarios();
      this.store.update((state) => {
        state.scenarios = scenarios;
        state.notice = `saved experiment ${saved.id}`;
        state.inlineError = null;
      });
      return saved.id;
    } catch (err) {
      this.callbacks.onError(err);
      return null;
    }
  }

  async load(id: string): Promise<void> {
    try {
      const doc = await this.api.getScenario(id);
      this.store.update((state) => {
        state.draft = draftFromScenario(doc);
        state.selectedBlock = null;
        state.notice = `loaded experiment ${id}`;
      });
    } catch (err) {
      this.callbacks.onError(err);
    }
  }

  async startInjection(localDateTime?: string): Promise<void> {
    const saved = await this.save();
    if (!saved) return;
    const kind = this.el<HTMLSelectElement>(".sink-kind").value;
    const target = this.el<HTMLInputElement>(".sink-target").value;
    const sink =
      kind === "interface"
        ? { kind, interface: target }
        : kind === "discard"
          ? { kind }
          : { kind, path: target };
    const scheduled = localDateTime
      ? new Date(localDateTime).toISOString()
      : undefined;
    try {
      await this.injection.start(saved, sink, scheduled);
    } catch (err) {
      this.callbacks.onError(err);
    }
  }

  private render(): void {
    const { draft, scenarios, session, notice } = this.store.state;
    const nameEl = this.el<HTMLInputElement>(".scenario-name");
    if (nameEl.value !== draft.name) nameEl.value = draft.name;

    const select = this.el<HTMLSelectElement>(".scenario-select");
    const options = ['<option value="">load…</option>']
      .concat(
        scenarios.map(
          (s) => `<option value="${s.id}"${s.id === draft.id ? " selected" : ""}>` +
            `${escapeHtml(s.name)} (${s.id})</option>`,
        ),
      )
      .join("");
    if (select.innerHTML !== options) select.innerHTML = options;

    const badge = this.el<HTMLElement>(".state-badge");
    const countdown = this.el<HTMLElement>(".countdown");
    const progress = this.el<HTMLElement>(".session-progress");
    if (session) {
      badge.hidden = false;
      badge.textContent = session.state;
      badge.className = `state-badge state-${session.state}`;
      progress.hidden = false;
      progress.textContent =
        `${session.packets_sent}/${session.total_packets} packets ` +
        `(${Math.round(session.progress * 100)}%)`;
      if (session.state === "scheduled" && session.scheduled_start) {
        countdown.hidden = false;
        this.tickCountdown(new Date(session.scheduled_start).getTime());
      } else {
        countdown.hidden = true;
        this.clearCountdown();
      }
    } else {
      badge.hidden = true;
      progress.hidden = true;
      countdown.hidden = true;
      this.clearCountdown();
    }

    const noticeEl = this.el<HTMLElement>(".notice");
    noticeEl.hidden = !notice;
    if (notice) noticeEl.textContent = notice;
  }

  private tickCountdown(startMs: number): void {
    const update = () => {
      const seconds = Math.max(0, Math.round((startMs - Date.now()) / 1000));
      this.el<HTMLElement>(".countdown").textContent = `starts in ${seconds}s`;
    };
    update();
    if (this.countdownTimer === null) {
      this.countdownTimer = setInterval(update, 1000);
    }
  }

  private clearCountdown(): void {
    if (this.countdownTimer !== null) {
      clearInterval(this.countdownTimer);
      this.countdownTimer = null;
    }
  }
}

function randomId(): string {
  return Array.from(crypto.getRandomValues(new Uint8Array(6)))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

function escapeHtml(value: string): string {
  return value.replaceAll("&", "&amp;").replaceAll("<", "&lt;");
}
