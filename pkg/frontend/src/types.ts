/** Wire types mirroring the backend JSON schemas. */

export type Phase = "reconnaissance" | "exploitation" | "delivery" | "control";

export interface Trace {
  id: string;
  name: string;
  phase: Phase;
  technique: string;
  roles: Record<string, string>;
  expected_answers: Record<string, unknown>;
  capture_ref: string;
  packet_count: number;
  duration: number;
  created_at: string;
}

export interface MapPair {
  from: string;
  to: string;
}

export interface BlockDoc {
  trace_id: string;
  offset_s: number;
  speed: number;
  address_map: MapPair[];
}

export interface ScenarioDoc {
  id: string;
  name: string;
  blocks: BlockDoc[];
  background_ref: string | null;
  notes: string;
}

export type SessionState =
  | "scheduled"
  | "running"
  | "completed"
  | "cancelled"
  | "failed";

export interface SessionView {
  id: string;
  scenario_id: string;
  sink: { kind: string; path?: string; interface?: string };
  state: SessionState;
  scheduled_start: string | null;
  packets_sent: number;
  total_packets: number;
  progress: number;
  errors: string[];
}

export interface JobView {
  id: string;
  kind: string;
  state: "running" | "completed" | "failed";
  created_at: string;
  result_ref: Record<string, unknown> | null;
  error: string | null;
}

export interface ValidationNote {
  kind: string;
  message: string;
}
