import { moveBlock } from "../scenario.js";
import type { Store } from "../store.js";
import { traceById } from "../store.js";
import {
  blockExtents,
  offsetFromDrag,
  progressLineX,
  scenarioSpanSeconds,
  speedFromResize,
} from "../timeline.js";
import { setSpeed } from "../scenario.js";

const LANE_HEIGHT = 34;

/**
 * Center timeline: one lane per block, horizontal position = offset,
 * width = played duration. Dragging a block updates its offset; the right
 * edge is a resize handle that adjusts playback speed. A vertical red line
 * tracks injection progress.
 */
export class TimelinePanel {
  zoomPxPerS = 4;
  private lanesEl: HTMLElement;
  private lineEl: HTMLElement;

  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    root.innerHTML = `
      <h2>Timeline</h2>
      <div class="timeline-surface">
        <div class="timeline-lanes"></div>
        <div class="progress-line" hidden></div>
      </div>
      <div class="timeline-hint">drag to set offset · drag right edge to set speed</div>
    `;
    this.lanesEl = root.querySelector(".timeline-lanes") as HTMLElement;
    this.lineEl = root.querySelector(".progress-line") as HTMLElement;
    store.subscribe(() => this.render());
  }

  private durationOf = (traceId: string): number =>
    traceById(this.store.state, traceId)?.duration ?? 1;

  render(): void {
    const { draft, selectedBlock, session } = this.store.state;
    this.lanesEl.innerHTML = "";
    this.lanesEl.style.height = `${Math.max(1, draft.blocks.length) * LANE_HEIGHT}px`;

    draft.blocks.forEach((block, index) => {
      const trace = traceById(this.store.state, block.trace_id);
      const extents = blockExtents(block, this.durationOf(block.trace_id),
        this.zoomPxPerS, index);
      const el = document.createElement("div");
      el.className = "timeline-block" + (index === selectedBlock ? " selected" : "");
      if (trace) el.classList.add(`phase-${trace.phase}`);
      el.dataset.index = String(index);
      el.style.left = `${extents.left}px`;
      el.style.width = `${extents.width}px`;
      el.style.top = `${extents.lane * LANE_HEIGHT}px`;
      el.title = `${trace?.name ?? block.trace_id} @ ${block.offset_s}s x${block.speed}`;
      el.textContent = trace?.name ?? block.trace_id;

      const handle = document.createElement("div");
      handle.className = "resize-handle";
      el.appendChild(handle);

      el.addEventListener("mousedown", (event) => {
        if (event.target === handle) return;
        this.beginDrag(event, index, block.offset_s);
      });
      handle.addEventListener("mousedown", (event) => {
        event.stopPropagation();
        this.beginResize(event, index, extents.width);
      });
      el.addEventListener("click", () => {
        this.store.update((state) => {
          state.selectedBlock = index;
        });
      });
      this.lanesEl.appendChild(el);
    });

    if (session && session.state !== "scheduled") {
      const span = scenarioSpanSeconds(draft.blocks, this.durationOf);
      this.lineEl.hidden = false;
      this.lineEl.style.left =
        `${progressLineX(session.progress, span, this.zoomPxPerS)}px`;
    } else if (!session) {
      this.lineEl.hidden = true;
    }
  }

  private beginDrag(event: MouseEvent, index: number, startOffset: number): void {
    event.preventDefault();
    const startX = event.clientX;
    const onMove = (move: MouseEvent) => {
      const offset = offsetFromDrag(startOffset, move.clientX - startX, this.zoomPxPerS);
      this.commitMove(index, offset);
    };
    const onUp = () => {
      document.removeEventListener("mousemove", onMove);
      document.removeEventListener("mouseup", onUp);
    };
    document.addEventListener("mousemove", onMove);
    document.addEventListener("mouseup", onUp);
  }

  commitMove(index: number, offset: number): void {
    const result = moveBlock(this.store.state.draft, index, offset);
    this.store.update((state) => {
      if (result.ok) {
        state.draft = result.draft;
        state.inlineError = null;
      } else {
        state.inlineError = result.error;
      }
      state.selectedBlock = index;
    });
  }

  private beginResize(event: MouseEvent, index: number, startWidth: number): void {
    event.preventDefault();
    const startX = event.clientX;
    const onMove = (move: MouseEvent) => {
      const width = startWidth + (move.clientX - startX);
      this.commitResize(index, width);
    };
    const onUp = () => {
      document.removeEventListener("mousemove", onMove);
      document.removeEventListener("mouseup", onUp);
    };
    document.addEventListener("mousemove", onMove);
    document.addEventListener("mouseup", onUp);
  }

  commitResize(index: number, widthPx: number): void {
    const block = this.store.state.draft.blocks[index];
    if (!block) return;
    const speed = speedFromResize(
      this.durationOf(block.trace_id),
      widthPx,
      this.zoomPxPerS,
    );
    const result = setSpeed(this.store.state.draft, index, speed);
    this.store.update((state) => {
      if (result.ok) {
        state.draft = result.draft;
        state.inlineError = null;
      } else {
        state.inlineError = result.error;
      }
      state.selectedBlock = index;
    });
  }
}
