import type { Draft } from "./scenario.js";
import { emptyDraft } from "./scenario.js";
import type { ScenarioDoc, SessionView, Trace } from "./types.js";

/**
 * Single mutable view-state container. Nothing here is authoritative: the
 * trace list, scenario list, and session always reflect the latest API
 * responses, and a page reload rebuilds the identical state from the API.
 */
export interface AppState {
  traces: Trace[];
  scenarios: ScenarioDoc[];
  draft: Draft;
  selectedBlock: number | null;
  session: SessionView | null;
  banner: string | null;
  notice: string | null;
  inlineError: string | null;
}

export function initialState(): AppState {
  return {
    traces: [],
    scenarios: [],
    draft: emptyDraft(),
    selectedBlock: null,
    session: null,
    banner: null,
    notice: null,
    inlineError: null,
  };
}

export type Listener = (state: AppState) => void;

export class Store {
  state: AppState = initialState();
  private listeners: Listener[] = [];

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(mutate: (state: AppState) => void): void {
    mutate(this.state);
    for (const listener of [...this.listeners]) listener(this.state);
  }
}

/** Look up a trace from the cached list; blocks render even when missing. */
export function traceById(state: AppState, id: string): Trace | undefined {
  return state.traces.find((trace) => trace.id === id);
}
