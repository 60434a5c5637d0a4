import type { Api } from "./api.js";
import { ApiError } from "./api.js";
import type { Store } from "./store.js";
import type { SessionView } from "./types.js";

const TERMINAL: ReadonlySet<string> = new Set(["completed", "cancelled", "failed"]);

/**
 * Drives one injection session: start or schedule, poll status every
 * second, stop on request. The progress line freezes wherever the last
 * snapshot put it once the session reaches a terminal state.
 */
export class InjectionController {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: Api,
    private store: Store,
    private pollMs = 1000,
  ) {}

  get session(): SessionView | null {
    return this.store.state.session;
  }

  async start(
    scenarioId: string,
    sink: { kind: string; path?: string; interface?: string },
    scheduledStart?: string,
    backgroundRef?: string,
  ): Promise<SessionView> {
    const view = await this.api.startInjection({
      scenario_id: scenarioId,
      sink,
      ...(scheduledStart ? { scheduled_start: scheduledStart } : {}),
      ...(backgroundRef ? { background_ref: backgroundRef } : {}),
    });
    this.store.update((state) => {
      state.session = view;
    });
    this.startPolling(view.id);
    return view;
  }

  async stop(): Promise<SessionView | null> {
    const current = this.session;
    if (!current) return null;
    this.stopPolling();
    try {
      const view = await this.api.cancelInjection(current.id);
      this.store.update((state) => {
        state.session = view;
      });
      return view;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        return this.refresh(current.id); // already finished; show final state
      }
      throw err;
    }
  }

  private async refresh(id: string): Promise<SessionView> {
    const view = await this.api.injectionStatus(id);
    this.store.update((state) => {
      state.session = view;
    });
    if (TERMINAL.has(view.state)) this.stopPolling();
    return view;
  }

  startPolling(id: string): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      this.refresh(id).catch(() => this.stopPolling());
    }, this.pollMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
