import { normalizeCidr, validateAddressMap } from "./cidr.js";
import type { BlockDoc, MapPair, ScenarioDoc, Trace } from "./types.js";

/**
 * The scenario draft edited on the timeline. The backend owns the stored
 * state; a draft is only ever a working copy that serializes to the exact
 * scenario JSON schema.
 */
export interface Draft {
  id: string;
  name: string;
  blocks: DraftBlock[];
  background_ref: string | null;
  notes: string;
}

export interface DraftBlock {
  trace_id: string;
  offset_s: number;
  speed: number;
  address_map: MapPair[];
}

export type EditResult =
  | { ok: true; draft: Draft }
  | { ok: false; error: string };

export function emptyDraft(): Draft {
  return { id: "", name: "", blocks: [], background_ref: null, notes: "" };
}

export function draftFromScenario(doc: ScenarioDoc): Draft {
  return {
    id: doc.id,
    name: doc.name,
    blocks: doc.blocks.map((block) => ({
      trace_id: block.trace_id,
      offset_s: block.offset_s,
      speed: block.speed,
      address_map: block.address_map.map((pair) => ({ ...pair })),
    })),
    background_ref: doc.background_ref ?? null,
    notes: doc.notes ?? "",
  };
}

/** Serialize to the backend scenario schema, normalizing CIDR spellings. */
export function serializeDraft(draft: Draft): ScenarioDoc {
  const blocks: BlockDoc[] = draft.blocks.map((block) => ({
    trace_id: block.trace_id,
    offset_s: block.offset_s,
    speed: block.speed,
    address_map: block.address_map.map((pair) => ({
      from: normalizeCidr(pair.from) ?? pair.from,
      to: normalizeCidr(pair.to) ?? pair.to,
    })),
  }));
  return {
    id: draft.id,
    name: draft.name,
    blocks,
    background_ref: draft.background_ref,
    notes: draft.notes,
  };
}

/** Draft-level validation mirroring the backend schema preconditions. */
export function validateDraft(draft: Draft): string[] {
  const problems: string[] = [];
  if (!draft.name.trim()) problems.push("scenario needs a name");
  if (draft.blocks.length === 0) problems.push("scenario needs at least one block");
  draft.blocks.forEach((block, index) => {
    if (block.offset_s < 0) problems.push(`block ${index + 1}: negative offset`);
    if (!(block.speed > 0)) problems.push(`block ${index + 1}: speed must be > 0`);
    const mapError = validateAddressMap(block.address_map);
    if (mapError) problems.push(`block ${index + 1}: ${mapError}`);
  });
  return problems;
}

function withBlocks(draft: Draft, blocks: DraftBlock[]): Draft {
  return { ...draft, blocks };
}

export function addBlock(
  draft: Draft,
  trace: Trace,
  offset_s: number,
  addressMap: MapPair[] = [],
): EditResult {
  if (offset_s < 0) return { ok: false, error: "offset must be >= 0" };
  const block: DraftBlock = {
    trace_id: trace.id,
    offset_s,
    speed: 1.0,
    address_map: addressMap.map((pair) => ({ ...pair })),
  };
  return { ok: true, draft: withBlocks(draft, [...draft.blocks, block]) };
}

export function removeBlock(draft: Draft, index: number): Draft {
  return withBlocks(
    draft,
    draft.blocks.filter((_, i) => i !== index),
  );
}

/** Dragging a block updates its offset; negative targets are rejected. */
export function moveBlock(draft: Draft, index: number, offset_s: number): EditResult {
  if (!(index in draft.blocks)) return { ok: false, error: "no such block" };
  if (offset_s < 0) return { ok: false, error: "offset must be >= 0" };
  const blocks = draft.blocks.map((block, i) =>
    i === index ? { ...block, offset_s } : block,
  );
  return { ok: true, draft: withBlocks(draft, blocks) };
}

export function setSpeed(draft: Draft, index: number, speed: number): EditResult {
  if (!(index in draft.blocks)) return { ok: false, error: "no such block" };
  if (!Number.isFinite(speed) || speed <= 0) {
    return { ok: false, error: "speed must be > 0" };
  }
  const blocks = draft.blocks.map((block, i) =>
    i === index ? { ...block, speed } : block,
  );
  return { ok: true, draft: withBlocks(draft, blocks) };
}

/** Replace a block's address map after validating it. */
export function setAddressMap(
  draft: Draft,
  index: number,
  pairs: MapPair[],
): EditResult {
  if (!(index in draft.blocks)) return { ok: false, error: "no such block" };
  const cleaned = pairs
    .map((pair) => ({ from: pair.from.trim(), to: pair.to.trim() }))
    .filter((pair) => pair.from || pair.to);
  const error = validateAddressMap(cleaned);
  if (error) return { ok: false, error };
  const blocks = draft.blocks.map((block, i) =>
    i === index ? { ...block, address_map: cleaned } : block,
  );
  return { ok: true, draft: withBlocks(draft, blocks) };
}
