/** IPv4 CIDR helpers for address-map validation; mirrors the backend rules. */

export interface Cidr {
  base: number; // network address as unsigned 32-bit
  len: number;
}

const OCTET = /^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})(?:\/(\d{1,2}))?$/;

/** Parse "10.0.0.0/24" or a bare address (treated as /32); null when invalid. */
export function parseCidr(text: string): Cidr | null {
  const match = OCTET.exec(text.trim());
  if (!match) return null;
  let value = 0;
  for (let i = 1; i <= 4; i++) {
    const octet = Number(match[i]);
    if (octet > 255) return null;
    value = value * 256 + octet;
  }
  const len = match[5] === undefined ? 32 : Number(match[5]);
  if (len > 32) return null;
  const base = maskBits(value, len);
  if (base !== value) return null; // host bits set: not a network address
  return { base, len };
}

function maskBits(value: number, len: number): number {
  if (len === 0) return 0;
  const mask = (0xffffffff << (32 - len)) >>> 0;
  return (value & mask) >>> 0;
}

export function formatCidr(cidr: Cidr): string {
  const v = cidr.base;
  const quad = [v >>> 24, (v >>> 16) & 255, (v >>> 8) & 255, v & 255].join(".");
  return `${quad}/${cidr.len}`;
}

/** Canonical form used in scenario JSON: always with the prefix length. */
export function normalizeCidr(text: string): string | null {
  const parsed = parseCidr(text);
  return parsed === null ? null : formatCidr(parsed);
}

export function cidrsOverlap(a: Cidr, b: Cidr): boolean {
  const len = Math.min(a.len, b.len);
  return maskBits(a.base, len) === maskBits(b.base, len);
}

/**
 * Validate an address-map draft: every pair parses, prefix lengths match
 * within a pair, and source prefixes are pairwise disjoint.
 * Returns an error message or null when the map is valid.
 */
export function validateAddressMap(
  pairs: { from: string; to: string }[],
): string | null {
  const sources: Cidr[] = [];
  for (const pair of pairs) {
    const from = parseCidr(pair.from);
    const to = parseCidr(pair.to);
    if (!from) return `invalid source prefix: ${pair.from || "(empty)"}`;
    if (!to) return `invalid target prefix: ${pair.to || "(empty)"}`;
    if (from.len !== to.len) {
      return `prefix lengths differ: ${pair.from} -> ${pair.to}`;
    }
    sources.push(from);
  }
  for (let i = 0; i < sources.length; i++) {
    for (let j = i + 1; j < sources.length; j++) {
      if (cidrsOverlap(sources[i], sources[j])) {
        return `source prefixes overlap: ${formatCidr(sources[i])} and ${formatCidr(sources[j])}`;
      }
    }
  }
  return null;
}
