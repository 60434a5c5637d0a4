import { moveBlock, removeBlock, setAddressMap, setSpeed } from "../scenario.js";
import type { Store } from "../store.js";
import { traceById } from "../store.js";
import type { MapPair } from "../types.js";

/**
 * Bottom panel: configuration for the selected block - offset, playback
 * speed, and the IPv4 address rewrites applied to that block. Invalid
 * edits surface an inline error and leave the draft unchanged.
 */
export class BlockConfigPanel {
  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    const { draft, selectedBlock, inlineError } = this.store.state;
    const block = selectedBlock === null ? undefined : draft.blocks[selectedBlock];
    if (selectedBlock === null || !block) {
      this.root.innerHTML =
        '<h2>Block</h2><p class="empty-state">select a block on the timeline</p>';
      return;
    }
    const trace = traceById(this.store.state, block.trace_id);
    const mapRows = [...block.address_map, { from: "", to: "" }]
      .map(
        (pair, row) => `
        <tr data-row="${row}">
          <td><input class="map-from" value="${escapeAttr(pair.from)}" placeholder="10.0.0.0/24" /></td>
          <td>→</td>
          <td><input class="map-to" value="${escapeAttr(pair.to)}" placeholder="192.0.2.0/24" /></td>
        </tr>`,
      )
      .join("");
    this.root.innerHTML = `
      <h2>Block ${selectedBlock + 1}: ${trace?.name ?? block.trace_id}</h2>
      <div class="block-fields">
        <label>offset (s)
          <input type="number" class="offset-input" step="0.1" value="${block.offset_s}" />
        </label>
        <label>speed (x)
          <input type="number" class="speed-input" step="0.1" value="${block.speed}" />
        </label>
        <button type="button" class="remove-block">remove block</button>
      </div>
      <h3>Address rewrites</h3>
      <table class="map-table"><tbody>${mapRows}</tbody></table>
      <button type="button" class="apply-map">apply rewrites</button>
      <div class="inline-error"${inlineError ? "" : " hidden"}></div>
    `;
    const errorEl = this.root.querySelector(".inline-error") as HTMLElement;
    if (inlineError) errorEl.textContent = inlineError;

    const offsetInput = this.root.querySelector(".offset-input") as HTMLInputElement;
    offsetInput.addEventListener("change", () => {
      this.apply(moveBlock(this.store.state.draft, selectedBlock,
        Number(offsetInput.value)));
    });
    const speedInput = this.root.querySelector(".speed-input") as HTMLInputElement;
    speedInput.addEventListener("change", () => {
      this.apply(setSpeed(this.store.state.draft, selectedBlock,
        Number(speedInput.value)));
    });
    (this.root.querySelector(".remove-block") as HTMLButtonElement)
      .addEventListener("click", () => {
        this.store.update((state) => {
          state.draft = removeBlock(state.draft, selectedBlock);
          state.selectedBlock = null;
          state.inlineError = null;
        });
      });
    (this.root.querySelector(".apply-map") as HTMLButtonElement)
      .addEventListener("click", () => {
        const pairs: MapPair[] = [];
        this.root.querySelectorAll(".map-table tbody tr").forEach((row) => {
          const from = (row.querySelector(".map-from") as HTMLInputElement).value;
          const to = (row.querySelector(".map-to") as HTMLInputElement).value;
          pairs.push({ from, to });
        });
        this.apply(setAddressMap(this.store.state.draft, selectedBlock, pairs));
      });
  }

  private apply(result: ReturnType<typeof moveBlock>): void {
    this.store.update((state) => {
      if (result.ok) {
        state.draft = result.draft;
        state.inlineError = null;
      } else {
        state.inlineError = result.error;
      }
    });
  }
}

function escapeAttr(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll('"', "&quot;")
    .replaceAll("<", "&lt;");
}
