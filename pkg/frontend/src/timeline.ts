import type { DraftBlock } from "./scenario.js";

/**
 * Pure geometry for the timeline. Pixel extents are a deterministic
 * function of (offset, trace duration, speed, zoom); no state is kept in
 * the DOM beyond what these functions recompute.
 */
export interface BlockExtents {
  left: number;
  width: number;
  lane: number;
}

export const MIN_BLOCK_PX = 6;

/** Played duration of a block in seconds: trace duration divided by speed. */
export function playedSeconds(durationS: number, speed: number): number {
  return durationS / speed;
}

export function blockExtents(
  block: DraftBlock,
  traceDurationS: number,
  zoomPxPerS: number,
  lane: number,
): BlockExtents {
  return {
    left: block.offset_s * zoomPxPerS,
    width: Math.max(MIN_BLOCK_PX, playedSeconds(traceDurationS, block.speed) * zoomPxPerS),
    lane,
  };
}

/** New offset after dragging by dxPx; clamped at zero, millisecond grid. */
export function offsetFromDrag(
  startOffsetS: number,
  dxPx: number,
  zoomPxPerS: number,
): number {
  const raw = startOffsetS + dxPx / zoomPxPerS;
  return Math.max(0, Math.round(raw * 1000) / 1000);
}

/** Speed that makes the block render widthPx wide (resize handle). */
export function speedFromResize(
  traceDurationS: number,
  widthPx: number,
  zoomPxPerS: number,
): number {
  const seconds = Math.max(widthPx, MIN_BLOCK_PX) / zoomPxPerS;
  const speed = traceDurationS / seconds;
  return Math.min(1000, Math.max(0.001, Math.round(speed * 1000) / 1000));
}

/** End of the scenario in seconds: latest block end, at least 1 s. */
export function scenarioSpanSeconds(
  blocks: DraftBlock[],
  durationOf: (traceId: string) => number,
): number {
  let end = 1;
  for (const block of blocks) {
    end = Math.max(
      end,
      block.offset_s + playedSeconds(durationOf(block.trace_id), block.speed),
    );
  }
  return end;
}

/** X position of the progress line for a session covering the span. */
export function progressLineX(
  progress: number,
  spanSeconds: number,
  zoomPxPerS: number,
): number {
  const clamped = Math.min(1, Math.max(0, progress));
  return clamped * spanSeconds * zoomPxPerS;
}
