// Drives the built console against a real backend process: composes the
// four-phase demo scenario through the UI, saves it, and checks the
// backend-stored JSON against the hand-written fixture; then exercises the
// injection lifecycle (scheduled -> running -> cancelled) via the live API.
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { createApp, type App } from "../src/app.js";

const NAME = "four-phase demo attack";
const ADDRESS_MAP = [
  { from: "203.0.113.66/32", to: "10.13.37.66/32" },
  { from: "192.0.2.23/32", to: "10.13.37.23/32" },
  { from: "198.51.100.99/32", to: "10.13.37.99/32" },
];

let server: ChildProcess | null = null;
let workdir = "";
let baseUrl = "";
let api: Api;
let app: App;
const traceIds: Record<string, string> = {};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function waitFor(
  predicate: () => boolean | Promise<boolean>,
  timeoutMs: number,
  what: string,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await predicate()) return;
    await new Promise((r) => setTimeout(r, 50));
  }
  const state = app?.store.state;
  throw new Error(
    `timed out waiting for ${what}; banner=${state?.banner} ` +
      `inlineError=${state?.inlineError} session=${JSON.stringify(state?.session)}`,
  );
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "socbench-ui-"));
  const storage = join(workdir, "storage");
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;

  const made = spawnSync(
    "socbench",
    ["demo", "make-traces", "--out-dir", join(workdir, "demo")],
    { encoding: "utf8" },
  );
  expect(made.status, made.stderr).toBe(0);

  // seed the library through the CLI (same storage the server reads)
  for (const file of readdirSync(join(workdir, "demo"))) {
    if (!file.endsWith(".json")) continue;
    const key = file.replace(".json", "");
    const meta = JSON.parse(readFileSync(join(workdir, "demo", file), "utf8"));
    const args = [
      "--storage", storage, "trace", "add",
      "--pcap", join(workdir, "demo", `${key}.pcap`),
      "--name", meta.name, "--phase", meta.phase, "--technique", meta.technique,
    ];
    for (const [role, address] of Object.entries(meta.roles)) {
      args.push("--role", `${role}=${address}`);
    }
    for (const [question, answer] of Object.entries(meta.expected_answers)) {
      const value = Array.isArray(answer) ? answer.join(",") : answer;
      args.push("--expect", `${question}=${value}`);
    }
    const added = spawnSync("socbench", args, { encoding: "utf8" });
    expect(added.status, added.stderr).toBe(0);
    traceIds[key] = added.stdout.trim();
  }

  server = spawn(
    "socbench",
    ["--storage", storage, "serve", "--bind", `127.0.0.1:${port}`],
    { stdio: "ignore" },
  );
  api = new Api({ baseUrl });
  await waitFor(async () => {
    try {
      await api.health();
      return true;
    } catch {
      return false;
    }
  }, 30000, "backend /health");

  document.body.innerHTML = '<div id="root"></div>';
  app = createApp(document.getElementById("root") as HTMLElement, api, 100);
  await app.reload();
}, 60000);

afterAll(() => {
  app?.injection.stopPolling();
  server?.kill("SIGTERM");
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

function clickAdd(rowName: string): void {
  const rows = [...document.querySelectorAll(".trace-row")];
  const row = rows.find(
    (el) => el.querySelector(".trace-name")?.textContent === rowName,
  );
  expect(row, `library row ${rowName}`).toBeTruthy();
  (row!.querySelector(".add-trace") as HTMLButtonElement).click();
}

function fillSelectedBlockMap(): void {
  for (const pair of ADDRESS_MAP) {
    const rows = document.querySelectorAll(".map-table tbody tr");
    const last = rows[rows.length - 1];
    (last.querySelector(".map-from") as HTMLInputElement).value = pair.from;
    (last.querySelector(".map-to") as HTMLInputElement).value = pair.to;
    (document.querySelector(".apply-map") as HTMLButtonElement).click();
  }
}

describe("console against the real backend", () => {
  it("lists the uploaded traces with phase badges", () => {
    expect(document.querySelectorAll(".trace-row")).toHaveLength(4);
    expect(document.querySelector(".badge.phase-control")).not.toBeNull();
  });

  it("composes, saves, and the stored JSON equals the hand-written fixture", async () => {
    clickAdd("nmap tcp connect scan");
    clickAdd("ssh service exploit");
    clickAdd("payload download over http");
    clickAdd("c2 beacon with data exfiltration");
    expect(app.store.state.draft.blocks.map((b) => b.offset_s)).toEqual([
      0, 60, 120, 180,
    ]);

    for (let index = 0; index < 4; index++) {
      app.store.update((state) => {
        state.selectedBlock = index;
      });
      fillSelectedBlockMap();
      expect(app.store.state.inlineError).toBeNull();
    }

    const nameInput = document.querySelector(".scenario-name") as HTMLInputElement;
    nameInput.value = NAME;
    nameInput.dispatchEvent(new Event("change"));

    const savedId = await app.controls.save();
    expect(savedId).toBeTruthy();

    const fixture = {
      id: savedId,
      name: NAME,
      blocks: [
        { trace_id: traceIds.portscan, offset_s: 0.0, speed: 1.0, address_map: ADDRESS_MAP },
        { trace_id: traceIds.exploit_cve, offset_s: 60.0, speed: 1.0, address_map: ADDRESS_MAP },
        { trace_id: traceIds.http_get, offset_s: 120.0, speed: 1.0, address_map: ADDRESS_MAP },
        { trace_id: traceIds.contact_cnc, offset_s: 180.0, speed: 1.0, address_map: ADDRESS_MAP },
      ],
      background_ref: null,
      notes: "",
    };

    const viaApi = await api.getScenario(savedId!);
    expect(viaApi).toEqual(fixture);

    const stored = JSON.parse(
      readFileSync(join(workdir, "storage", "scenarios", `${savedId}.json`), "utf8"),
    );
    expect(stored).toEqual(fixture);

    const notes = await api.validateScenario(savedId!);
    expect(notes).toEqual([]); // blocks already in phase order
  });

  it("reload reconstructs the identical draft from the API alone", async () => {
    const id = app.store.state.draft.id;
    const before = JSON.parse(JSON.stringify(app.store.state.draft));
    document.body.innerHTML = '<div id="root"></div>';
    const fresh = createApp(document.getElementById("root") as HTMLElement, api, 100);
    await fresh.reload();
    await fresh.controls.load(id);
    expect(fresh.store.state.draft).toEqual(before);
    fresh.injection.stopPolling();
    // continue with the original app wired to the old DOM
    document.body.innerHTML = '<div id="root"></div>';
    app = createApp(document.getElementById("root") as HTMLElement, api, 100);
    await app.reload();
    await app.controls.load(id);
  });

  it("start/stop drives scheduled -> running -> cancelled via the real API", async () => {
    // dry-run sink: real pacing engine, no raw-socket privileges needed
    (document.querySelector(".sink-kind") as HTMLSelectElement).value = "discard";
    // schedule two minutes out: state is 'scheduled' with a countdown
    const at = new Date(Date.now() + 120_000);
    (document.querySelector(".schedule-at") as HTMLInputElement).value =
      at.toISOString().slice(0, 19);
    (document.querySelector(".schedule-injection") as HTMLButtonElement).click();
    await waitFor(
      () => app.store.state.session?.state === "scheduled",
      10000,
      "scheduled session",
    );
    const badge = document.querySelector(".state-badge") as HTMLElement;
    expect(badge.textContent).toBe("scheduled");
    expect((document.querySelector(".countdown") as HTMLElement).hidden).toBe(false);

    (document.querySelector(".stop-injection") as HTMLButtonElement).click();
    await waitFor(
      () => app.store.state.session?.state === "cancelled",
      10000,
      "cancelled scheduled session",
    );
    expect(app.store.state.session?.packets_sent).toBe(0);

    // immediate start: running with live progress, then stop mid-replay
    (document.querySelector(".start-injection") as HTMLButtonElement).click();
    await waitFor(
      () => app.store.state.session?.state === "running",
      10000,
      "running session",
    );
    await waitFor(
      () => (app.store.state.session?.packets_sent ?? 0) > 0,
      15000,
      "first packets on the wire",
    );
    expect(badge.textContent).toBe("running");
    const line = document.querySelector(".progress-line") as HTMLElement;
    expect(line.hidden).toBe(false);

    (document.querySelector(".stop-injection") as HTMLButtonElement).click();
    await waitFor(
      () => app.store.state.session?.state === "cancelled",
      10000,
      "cancelled running session",
    );
    const final = app.store.state.session!;
    expect(final.packets_sent).toBeGreaterThan(0);
    expect(final.packets_sent).toBeLessThan(final.total_packets);
  });
});
