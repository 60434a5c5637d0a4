import { Api } from "../src/api.js";
import type { Trace } from "../src/types.js";

/** fetch stub driven by a route table: "METHOD path-prefix" -> handler. */
export type RouteHandler = (
  url: URL,
  init: RequestInit,
) => { status?: number; body?: unknown } | Promise<{ status?: number; body?: unknown }>;

export interface StubbedApi {
  api: Api;
  calls: { method: string; url: URL }[];
}

export function apiStub(routes: Record<string, RouteHandler>): StubbedApi {
  const calls: { method: string; url: URL }[] = [];
  const fetchFn: typeof fetch = async (input, init = {}) => {
    const url = new URL(String(input), "http://stub.local");
    const method = (init.method ?? "GET").toUpperCase();
    calls.push({ method, url });
    for (const [key, handler] of Object.entries(routes)) {
      const [routeMethod, prefix] = key.split(" ", 2);
      if (method === routeMethod && url.pathname.startsWith(prefix)) {
        const result = await handler(url, init);
        const status = result.status ?? 200;
        return new Response(
          result.body === undefined ? null : JSON.stringify(result.body),
          { status, headers: { "Content-Type": "application/json" } },
        );
      }
    }
    return new Response(JSON.stringify({ detail: `no stub for ${method} ${url.pathname}` }), {
      status: 404,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { api: new Api({ fetchFn }), calls };
}

export function fakeTrace(overrides: Partial<Trace> = {}): Trace {
  return {
    id: "t-" + Math.random().toString(16).slice(2, 8),
    name: "trace",
    phase: "reconnaissance",
    technique: "portscan",
    roles: { attacker: "10.0.0.1", victim: "10.0.0.2" },
    expected_answers: {},
    capture_ref: "traces/x.pcap",
    packet_count: 10,
    duration: 2.0,
    created_at: "2026-03-02T00:00:00+00:00",
    ...overrides,
  };
}

export const FOUR_PHASE_TRACES: Trace[] = [
  fakeTrace({ id: "tr-recon", name: "nmap tcp connect scan", phase: "reconnaissance", duration: 2.25 }),
  fakeTrace({ id: "tr-exploit", name: "ssh service exploit", phase: "exploitation", duration: 0.9 }),
  fakeTrace({ id: "tr-delivery", name: "payload download over http", phase: "delivery", duration: 0.3 }),
  fakeTrace({ id: "tr-control", name: "c2 beacon with data exfiltration", phase: "control", duration: 10.0 }),
];
