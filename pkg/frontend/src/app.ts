import { Api, ApiError } from "./api.js";
import { InjectionController } from "./injection.js";
import { addBlock } from "./scenario.js";
import { Store } from "./store.js";
import type { Trace } from "./types.js";
import { BlockConfigPanel } from "./ui/blockconfig.js";
import { ControlsPanel } from "./ui/controls.js";
import { LibraryPanel } from "./ui/library.js";
import { TimelinePanel } from "./ui/timelinepanel.js";

export interface App {
  store: Store;
  api: Api;
  library: LibraryPanel;
  timeline: TimelinePanel;
  blockConfig: BlockConfigPanel;
  controls: ControlsPanel;
  injection: InjectionController;
  reload(): Promise<void>;
}

/**
 * Wire the console into a root element. All durable state lives behind the
 * API; boot (or reload) reconstructs the entire view from API responses.
 */
export function createApp(root: HTMLElement, api: Api, pollMs = 1000): App {
  root.innerHTML = `
    <div class="banner" hidden></div>
    <div class="layout">
      <aside class="panel library-panel"></aside>
      <main class="panel timeline-panel"></main>
      <aside class="panel controls-panel"></aside>
      <section class="panel block-panel"></section>
    </div>
  `;
  const bannerEl = root.querySelector(".banner") as HTMLElement;
  const store = new Store();
  const injection = new InjectionController(api, store, pollMs);

  const onError = (err: unknown) => {
    const message =
      err instanceof ApiError && err.status === 0
        ? "backend unreachable - check that the service is running"
        : err instanceof Error
          ? err.message
          : String(err);
    store.update((state) => {
      state.banner = message;
    });
  };

  const onAdd = (trace: Trace) => {
    // drop the new block after the latest existing one
    const draft = store.state.draft;
    const lastEnd = draft.blocks.reduce(
      (acc, block) => Math.max(acc, block.offset_s),
      0,
    );
    const result = addBlock(draft, trace, draft.blocks.length ? lastEnd + 60 : 0);
    store.update((state) => {
      if (result.ok) {
        state.draft = result.draft;
        state.selectedBlock = result.draft.blocks.length - 1;
        state.inlineError = null;
      } else {
        state.inlineError = result.error;
      }
    });
  };

  store.subscribe((state) => {
    bannerEl.hidden = state.banner === null;
    if (state.banner !== null) bannerEl.textContent = state.banner;
  });

  const library = new LibraryPanel(
    root.querySelector(".library-panel") as HTMLElement,
    api,
    store,
    { onAdd, onError },
  );
  const timeline = new TimelinePanel(
    root.querySelector(".timeline-panel") as HTMLElement,
    store,
  );
  const blockConfig = new BlockConfigPanel(
    root.querySelector(".block-panel") as HTMLElement,
    store,
  );
  const controls = new ControlsPanel(
    root.querySelector(".controls-panel") as HTMLElement,
    api,
    store,
    injection,
    { onError },
  );

  const reload = async () => {
    await library.reload();
    try {
      const scenarios = await api.listScenarios();
      store.update((state) => {
        state.scenarios = scenarios;
      });
    } catch (err) {
      onError(err);
    }
  };

  return { store, api, library, timeline, blockConfig, controls, injection, reload };
}

/** Browser entry point; tests call createApp directly instead. */
export function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = createApp(root, new Api({ baseUrl: "" }));
  void app.reload();
}
