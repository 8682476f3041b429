// DOM layer. Renders ViewState; forwards user input to gateway services.
// Every input maps to exactly one service call (audited via client.sentLog),
// and no displayed phase ever comes from anywhere but a /state event.

import { BridgeClient, BridgeError, SocketFactory } from "./client.js";
import {
  Connection,
  ViewState,
  activePlan,
  currentStepIndex,
  initialState,
  reduce,
  reduceConnection,
  reduceInput,
  reduceInputSettled,
  reduceSession,
} from "./model.js";
import { sessionTopic } from "./protocol.js";
import { TRUST_LEVELS } from "./trust_levels.js";

const DEMO_MAP = {
  width: 6,
  height: 4,
  cell_size: 1.0,
  origin_e: 0.0,
  origin_n: 0.0,
  probs: [
    0.05, 0.1, 0.8, 0.0, 0.2, 0.9,
    0.0, 0.3, 0.1, 0.75, 0.0, 0.1,
    0.6, 0.0, 0.2, 0.05, 0.95, 0.0,
    0.1, 0.55, 0.0, 0.3, 0.1, 0.7,
  ],
};

const PANEL_HTML = `
  <div id="banner" class="banner"></div>
  <section id="connect-panel">
    <input id="gateway-url" placeholder="ws://127.0.0.1:9091/bridge" />
    <input id="session-id" placeholder="session id (blank = new)" />
    <button id="btn-connect">Connect</button>
    <span id="conn-status" data-status="idle">idle</span>
  </section>
  <section id="trust-panel">
    <label>Autonomy:
      <select id="trust-select"></select>
    </label>
    <p id="trust-description"></p>
  </section>
  <section id="map-panel">
    <h3>Field</h3>
    <canvas id="map-canvas" width="360" height="240"></canvas>
    <div id="map-summary"></div>
    <div id="cell-editor">
      <input id="cell-index" type="number" placeholder="cell" />
      <input id="cell-prob" type="number" step="0.05" min="0" max="1" placeholder="p" />
      <button id="btn-set-cell">Set probability</button>
    </div>
  </section>
  <section id="phase-panel">
    <h3>Mission</h3>
    <div>phase: <b id="phase"></b> <span id="partial-flag"></span></div>
    <div id="validation"></div>
    <div id="controls">
      <button id="btn-propose">Propose</button>
      <button id="btn-accept">Accept</button>
      <button id="btn-reject">Reject</button>
      <button id="btn-commit">Commit draft</button>
      <label><input id="commit-partial" type="checkbox" />partial</label>
      <button id="btn-undo">Undo</button>
      <button id="btn-start">Start</button>
      <button id="btn-pause">Pause</button>
      <button id="btn-resume">Resume</button>
      <button id="btn-abort">Abort</button>
    </div>
    <div id="palette"></div>
  </section>
  <section id="plan-panel">
    <h3>Plan <span id="plan-cost"></span></h3>
    <ol id="plan-steps"></ol>
  </section>
  <section id="challenge-panel">
    <h3>Challenges</h3>
    <div id="challenge-builder">
      <select id="foil-kind">
        <option value="forbid">forbid</option>
        <option value="require">require</option>
        <option value="order">order ... before ...</option>
        <option value="add-goal">add goal</option>
        <option value="drop-goal">drop goal</option>
      </select>
      <input id="foil-a" placeholder="(move c0 c1)" />
      <input id="foil-b" placeholder="second action (order only)" />
      <button id="btn-challenge">Challenge</button>
    </div>
    <div id="challenge-list"></div>
  </section>
  <section id="telemetry-panel">
    <h3>Telemetry</h3>
    <table><tbody id="telemetry-rows"></tbody></table>
    <div id="metrics"></div>
  </section>
  <div id="error-bar"></div>
`;

function esc(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" }[c]!));
}

export class ConsoleApp {
  state: ViewState = initialState();
  client: BridgeClient | null = null;
  private root: HTMLElement;

  constructor(private doc: Document, private factory: SocketFactory) {
    const mount = doc.getElementById("app") ?? doc.body;
    mount.innerHTML = PANEL_HTML;
    this.root = mount;
    this.bind();
    this.render();
  }

  private el<T extends HTMLElement>(id: string): T {
    const found = this.doc.getElementById(id);
    if (found === null) throw new Error(`missing element #${id}`);
    return found as T;
  }

  private bind(): void {
    const trust = this.el<HTMLSelectElement>("trust-select");
    trust.innerHTML = TRUST_LEVELS.map((t) => `<option value="${t.id}">${t.label}</option>`).join("");
    trust.addEventListener("change", () => {
      this.send(`set trust ${trust.value}`, "set_trust_level", { level: trust.value });
      this.renderTrustDescription();
    });
    this.el("btn-connect").addEventListener("click", () => {
      const url = this.el<HTMLInputElement>("gateway-url").value || "ws://127.0.0.1:9091/bridge";
      const sid = this.el<HTMLInputElement>("session-id").value.trim();
      this.connect(url, sid || null);
    });
    const simple: [string, string, () => Record<string, unknown>][] = [
      ["btn-propose", "propose", () => ({})],
      ["btn-reject", "resolve", () => ({ decision: "reject" })],
      ["btn-accept", "resolve", () => ({ decision: "accept" })],
      ["btn-undo", "undo_last", () => ({})],
      ["btn-start", "start", () => ({})],
      ["btn-pause", "pause", () => ({})],
      ["btn-resume", "resume", () => ({})],
      ["btn-abort", "abort", () => ({})],
    ];
    for (const [id, service, payload] of simple) {
      this.el(id).addEventListener("click", () => this.send(id.replace("btn-", ""), service, payload()));
    }
    this.el("btn-commit").addEventListener("click", () => {
      const partial = this.el<HTMLInputElement>("commit-partial").checked;
      this.send("commit draft", "commit_draft", { partial });
    });
    this.el("btn-challenge").addEventListener("click", () => {
      const kind = this.el<HTMLSelectElement>("foil-kind").value;
      const a = this.el<HTMLInputElement>("foil-a").value.trim();
      const b = this.el<HTMLInputElement>("foil-b").value.trim();
      const foil = kind === "order" ? `order ${a} before ${b}` : `${kind} ${a}`;
      this.send(`challenge ${foil}`, "challenge", { foil });
    });
    this.el("btn-set-cell").addEventListener("click", () => {
      const s = this.state.session;
      if (s === null) return;
      const cell = Number(this.el<HTMLInputElement>("cell-index").value);
      const p = Number(this.el<HTMLInputElement>("cell-prob").value);
      const probs = [...s.map.probs];
      if (!(cell >= 0 && cell < probs.length)) return;
      probs[cell] = p;
      this.send(`set cell ${cell} to ${p}`, "load_map", {
        map: { ...s.map, probs },
        home: s.home,
        blocked: s.blocked,
        threshold: s.threshold,
      });
    });
  }

  connect(url: string, sessionId: string | null = null): void {
    const client = new BridgeClient(this.factory);
    this.client = client;
    client.onStatus((status) => {
      this.state = reduceConnection(this.state, status as Connection);
      if (status === "open") {
        void this.attach(sessionId);
      }
      this.render();
    });
    client.onMessage((msg) => {
      this.state = reduce(this.state, msg);
      this.render();
    });
    client.connect(url);
    this.render();
  }

  private async attach(sessionId: string | null): Promise<void> {
    if (this.client === null) return;
    try {
      let sid = sessionId;
      if (sid === null) {
        const created = await this.client.call("create_session", { map: DEMO_MAP, seed: 1 });
        sid = created.session_id as string;
      }
      this.state = reduceSession(this.state, sid);
      for (const kind of ["state", "plan", "telemetry", "metrics"] as const) {
        this.client.subscribe(sessionTopic(sid, kind), () => undefined);
      }
      if (sessionId !== null) {
        await this.client.call("get_state", { session_id: sid });
      }
    } catch (err) {
      this.showError(err);
    }
    this.render();
  }

  /** One user input -> exactly one service call. */
  private send(description: string, service: string, payload: Record<string, unknown>): void {
    if (this.client === null || this.state.sessionId === null) return;
    this.state = reduceInput(this.state, description);
    this.render();
    this.client
      .call(service, { session_id: this.state.sessionId, ...payload })
      .catch((err) => this.showError(err))
      .finally(() => {
        this.state = reduceInputSettled(this.state, description);
        this.render();
      });
  }

  private showError(err: unknown): void {
    const code = err instanceof BridgeError ? err.code : "client_error";
    const message = err instanceof Error ? err.message : String(err);
    this.state = { ...this.state, lastError: { code, message } };
    this.render();
  }

  // -- rendering ------------------------------------------------------------

  private renderTrustDescription(): void {
    const selected = this.el<HTMLSelectElement>("trust-select").value;
    const info = TRUST_LEVELS.find((t) => t.id === selected);
    this.el("trust-description").textContent = info?.description ?? "";
  }

  render(): void {
    const s = this.state;
    const connected = s.connection === "open";
    const banner = this.el("banner");
    banner.textContent = connected ? "" : `gateway ${s.connection}: inputs disabled`;
    banner.className = connected ? "banner" : "banner visible";
    const status = this.el("conn-status");
    status.textContent = s.connection;
    status.setAttribute("data-status", s.connection);

    for (const button of Array.from(this.root.querySelectorAll("button"))) {
      if (button.id !== "btn-connect") (button as HTMLButtonElement).disabled = !connected;
    }

    const phase = s.displayedPhase ?? "-";
    this.el("phase").textContent = phase;
    this.el("partial-flag").textContent = s.session?.partial_commit ? "(partial mission)" : "";

    const snap = s.session;
    const trustSelect = this.el<HTMLSelectElement>("trust-select");
    const trustPending = s.pendingInputs.some((d) => d.startsWith("set trust"));
    if (snap !== null && !trustPending && trustSelect.value !== snap.trust) {
      trustSelect.value = snap.trust;
    }
    this.renderTrustDescription();

    const validation = snap?.validation;
    this.el("validation").textContent = validation
      ? validation.valid
        ? `validated: cost ${validation.total_cost}`
        : validation.steps_ok
          ? `goal incomplete: missing ${validation.missing_goals.join(", ")}`
          : `invalid at step ${validation.first_failing_step}: ${validation.unsatisfied.join(", ")}`
      : "";

    this.renderControls();
    this.renderPalette();
    this.renderMap();
    this.renderPlan();
    this.renderChallenges();
    this.renderTelemetry();

    const err = s.lastError;
    this.el("error-bar").textContent = err ? `${err.code}: ${err.message}` : "";
  }

  private renderControls(): void {
    const s = this.state.session;
    const phase = this.state.displayedPhase;
    const show = (id: string, on: boolean) => {
      this.el(id).style.display = on ? "" : "none";
    };
    const trust = s?.trust ?? "low";
    show("btn-propose", trust === "partial" && phase === "idle");
    show("btn-accept", trust === "partial" && (phase === "proposed" || phase === "challenging"));
    show("btn-reject", trust === "partial" && (phase === "proposed" || phase === "challenging"));
    show("btn-commit", trust === "low" && phase === "drafting");
    show("btn-undo", trust === "low" && phase === "drafting");
    show(
      "btn-start",
      (trust === "full" && phase === "idle") || ((trust === "low" || trust === "partial") && phase === "committed"),
    );
    show("btn-pause", phase === "executing");
    show("btn-resume", phase === "paused");
    show("btn-abort", phase === "executing" || phase === "paused");
    show("challenge-builder", trust === "partial" && (phase === "proposed" || phase === "challenging"));
  }

  private renderPalette(): void {
    const s = this.state.session;
    const palette = this.el("palette");
    const actions = s?.legal_actions ?? null;
    if (actions === null) {
      palette.innerHTML = "";
      return;
    }
    palette.innerHTML = actions
      .map((a) => `<button class="action-btn" data-action="${esc(a)}">${esc(a)}</button>`)
      .join(" ");
    for (const btn of Array.from(palette.querySelectorAll("button.action-btn"))) {
      btn.addEventListener("click", () => {
        const action = (btn as HTMLElement).getAttribute("data-action")!;
        this.send(`append ${action}`, "append_action", { action });
      });
      (btn as HTMLButtonElement).disabled = this.state.connection !== "open";
    }
  }

  private renderMap(): void {
    const s = this.state.session;
    const summary = this.el("map-summary");
    if (s === null) {
      summary.textContent = "no session";
      return;
    }
    const sim = s.sim;
    summary.textContent =
      `${s.map.width}x${s.map.height} cells, ${s.targets.length} targets, ` +
      `robot at ${sim ? sim.cell : s.home}` +
      (sim ? `, cleared ${sim.cleared.length}, damaged ${sim.damaged.length}` : "");
    const canvas = this.el<HTMLCanvasElement>("map-canvas");
    let ctx: CanvasRenderingContext2D | null = null;
    try {
      ctx = typeof canvas.getContext === "function" ? canvas.getContext("2d") : null;
    } catch {
      ctx = null;
    }
    if (ctx === null || ctx === undefined) return; // headless test DOM has no 2d context
    const { width, height, probs } = s.map;
    const cw = canvas.width / width;
    const ch = canvas.height / height;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    for (let c = 0; c < probs.length; c++) {
      const x = (c % width) * cw;
      const y = Math.floor(c / width) * ch;
      const p = probs[c];
      ctx.fillStyle = s.blocked.includes(c)
        ? "#444"
        : `rgb(${Math.round(80 + 175 * p)}, ${Math.round(200 - 140 * p)}, 90)`;
      ctx.fillRect(x, y, cw - 1, ch - 1);
      if (s.targets.includes(c)) {
        ctx.strokeStyle = "#b00";
        ctx.strokeRect(x + 1, y + 1, cw - 3, ch - 3);
      }
      if (sim?.cleared.includes(c)) {
        ctx.fillStyle = "rgba(40, 90, 255, 0.5)";
        ctx.fillRect(x, y, cw - 1, ch - 1);
      }
      if (sim?.damaged.includes(c)) {
        ctx.fillStyle = "rgba(255, 10, 10, 0.6)";
        ctx.fillRect(x + cw / 4, y + ch / 4, cw / 2, ch / 2);
      }
    }
    const robot = sim ? sim.cell : s.home;
    ctx.fillStyle = "#000";
    ctx.beginPath();
    ctx.arc((robot % width) * cw + cw / 2, Math.floor(robot / width) * ch + ch / 2, Math.min(cw, ch) / 4, 0, Math.PI * 2);
    ctx.fill();
  }

  private renderPlan(): void {
    const plan = activePlan(this.state);
    const list = this.el("plan-steps");
    this.el("plan-cost").textContent = plan ? `(cost ${plan.cost})` : "";
    if (plan === null) {
      list.innerHTML = "";
      return;
    }
    const current = currentStepIndex(this.state);
    list.innerHTML = plan.steps
      .map((step, n) => {
        const cls = current === null ? "" : n < current ? "done" : n === current ? "current" : "";
        return `<li class="${cls}">${esc(step)}</li>`;
      })
      .join("");
  }

  private renderChallenges(): void {
    const s = this.state.session;
    const box = this.el("challenge-list");
    if (s === null || s.challenges.length === 0) {
      box.innerHTML = "";
      return;
    }
    box.innerHTML = s.challenges
      .map((c, n) => {
        const stale = c.generation !== s.proposal_generation;
        const verdict = c.feasible
          ? `<div class="compare"><span>original ${esc(c.original_cost)}</span>` +
            `<span>foil ${esc(c.foil_cost ?? "")}</span>` +
            `<span class="delta" data-delta="${esc(c.cost_delta ?? "")}">delta ${esc(c.cost_delta ?? "")}</span></div>` +
            `<ul class="diff">${c.diff
              .map((d) => `<li class="${d.op}">${d.op === "add" ? "+" : d.op === "remove" ? "-" : "="} ${esc(d.step)}</li>`)
              .join("")}</ul>` +
            (stale ? "" : `<button class="adopt-btn" data-index="${n}">Adopt this plan</button>`)
          : `<div class="infeasible">infeasible: ${esc(c.infeasible_reason ?? "")}</div>`;
        return `<div class="challenge"><div class="query">${esc(c.query)}</div>${verdict}</div>`;
      })
      .join("");
    for (const btn of Array.from(box.querySelectorAll("button.adopt-btn"))) {
      btn.addEventListener("click", () => {
        const index = Number((btn as HTMLElement).getAttribute("data-index"));
        this.send(`adopt foil ${index}`, "resolve", { decision: "adopt", index });
      });
      (btn as HTMLButtonElement).disabled = this.state.connection !== "open";
    }
  }

  private renderTelemetry(): void {
    const rows = this.el("telemetry-rows");
    rows.innerHTML = this.state.telemetry
      .slice(-12)
      .map(
        (t) =>
          `<tr><td>${t.tick}</td><td>${esc(t.action)}</td><td>${esc(t.result)}</td>` +
          `<td>cell ${t.robot_cell}</td><td>battery ${t.battery}</td></tr>`,
      )
      .join("");
    const m = this.state.metrics;
    this.el("metrics").textContent = m
      ? `weeds ${m.weeds_removed}/${m.weeds_present_initially} removed, ` +
        `damage ${m.crops_damaged}, distance ${m.distance_cells}, ` +
        `energy ${m.energy_used}, max passes ${m.max_passes_per_cell}, ticks ${m.ticks_elapsed}`
      : "";
  }
}
