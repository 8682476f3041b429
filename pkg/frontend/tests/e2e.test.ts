// Live end-to-end: a real gateway process, a real websocket, the real DOM
// wiring. A PartialTrust propose -> challenge -> accept -> execute flow is
// driven entirely through UI controls.

import { spawn, ChildProcess } from "node:child_process";

import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleApp } from "../src/view.js";
import type { SocketLike } from "../src/client.js";

const PORT = 9300 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
let gateway: ChildProcess;

async function until(check: () => boolean, what: string, ms = 20_000): Promise<void> {
  const t0 = Date.now();
  while (!check()) {
    if (Date.now() - t0 > ms) throw new Error(`timeout waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 25));
  }
}

beforeAll(async () => {
  gateway = spawn(
    "python3",
    ["-m", "harrow.cli", "serve", "--host", "127.0.0.1", "--port", String(PORT), "--tick-rate", "0"],
    { stdio: "ignore" },
  );
  const t0 = Date.now();
  for (;;) {
    try {
      const res = await fetch(`${BASE}/healthz`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() - t0 > 25_000) throw new Error("gateway did not come up");
    await new Promise((r) => setTimeout(r, 120));
  }
});

afterAll(() => {
  gateway?.kill();
});

describe("console against a live gateway", () => {
  it("completes a partial-trust mission from the UI", async () => {
    const app = new ConsoleApp(
      document,
      (url) => new WebSocket(url) as unknown as SocketLike,
    );
    const statePhases: string[] = [];
    app.connect(`ws://127.0.0.1:${PORT}/bridge`, null);
    app.client!.onMessage((msg) => {
      if (msg.op === "event" && msg.topic?.endsWith("/state")) {
        statePhases.push((msg.payload as { phase: string }).phase);
      }
    });
    await until(() => app.state.connection === "open", "socket open");
    await until(() => app.state.displayedPhase === "idle", "latched idle state");

    // trust selector -> partial
    const select = document.getElementById("trust-select") as HTMLSelectElement;
    select.value = "partial";
    select.dispatchEvent(new Event("change"));
    await until(() => app.state.session?.trust === "partial", "trust change");
    expect(document.getElementById("trust-description")?.textContent).toContain("Challenge");

    // propose
    (document.getElementById("btn-propose") as HTMLButtonElement).click();
    await until(() => app.state.displayedPhase === "proposed", "proposal");
    const planSteps = app.state.session!.proposal!.steps;
    expect(planSteps.length).toBeGreaterThan(0);
    expect(document.querySelectorAll("#plan-steps li").length).toBe(planSteps.length);

    // challenge: force a detour move into the mission
    (document.getElementById("foil-kind") as HTMLSelectElement).value = "require";
    (document.getElementById("foil-a") as HTMLInputElement).value = "(move c1 c0)";
    (document.getElementById("btn-challenge") as HTMLButtonElement).click();
    await until(() => (app.state.session?.challenges.length ?? 0) === 1, "explanation");
    expect(app.state.displayedPhase).toBe("challenging");
    const deltaNode = document.querySelector(".delta");
    expect(deltaNode).not.toBeNull();
    const delta = Number(deltaNode!.getAttribute("data-delta"));
    expect(Number.isFinite(delta)).toBe(true);
    expect(delta).toBeGreaterThanOrEqual(0);

    // accept the original proposal
    (document.getElementById("btn-accept") as HTMLButtonElement).click();
    await until(() => app.state.displayedPhase === "committed", "commit");

    // start: tick-rate 0 runs the mission synchronously
    (document.getElementById("btn-start") as HTMLButtonElement).click();
    await until(() => app.state.displayedPhase === "done", "mission end");
    expect(app.state.telemetry.length).toBe(planSteps.length);
    expect(document.getElementById("metrics")?.textContent).toContain("weeds");
    expect(document.getElementById("phase")?.textContent).toBe("done");

    // every displayed phase change corresponds to a received state event
    for (const phase of app.state.phaseLog) {
      expect(statePhases).toContain(phase);
    }
    expect(app.state.phaseLog).toEqual(["idle", "proposed", "challenging", "committed", "done"]);

    // one UI input -> one service call (plus the initial create_session)
    const calls = app.client!.sentLog.filter((m) => m.op === "call");
    expect(calls.map((c) => c.service)).toEqual([
      "create_session",
      "set_trust_level",
      "propose",
      "challenge",
      "resolve",
      "start",
    ]);
    app.client!.close();
  });

  it("shows precondition details when a low-trust pick is illegal", async () => {
    const app = new ConsoleApp(
      document,
      (url) => new WebSocket(url) as unknown as SocketLike,
    );
    app.connect(`ws://127.0.0.1:${PORT}/bridge`, null);
    await until(() => app.state.displayedPhase === "idle", "latched idle state");
    // low trust: the palette offers only legal actions; force an illegal call
    await app
      .client!.call("append_action", {
        session_id: app.state.sessionId,
        action: "(weed c2)",
      })
      .then(
        () => {
          throw new Error("expected precondition rejection");
        },
        (err) => {
          expect(err.code).toBe("precondition_unsatisfied");
          expect(String(err.message)).toContain("(at c2)");
        },
      );
    app.client!.close();
  });

  it("disables inputs and shows a banner when the gateway is unreachable", async () => {
    const app = new ConsoleApp(
      document,
      (url) => new WebSocket(url) as unknown as SocketLike,
    );
    app.connect("ws://127.0.0.1:1/bridge", null);
    await until(() => app.state.connection === "closed", "failed connect");
    const banner = document.getElementById("banner")!;
    expect(banner.className).toContain("visible");
    expect(banner.textContent).toContain("closed");
    expect((document.getElementById("btn-propose") as HTMLButtonElement).disabled).toBe(true);
  });
});
