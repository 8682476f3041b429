// Thin bridge client: correlated calls, topic subscriptions, an audit log
// of everything sent. No session logic lives here.

import type { BridgeMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close" | "message" | "error", cb: (ev: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class BridgeError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

interface Pending {
  resolve: (payload: any) => void;
  reject: (err: BridgeError) => void;
}

export class BridgeClient {
  private socket: SocketLike | null = null;
  private nextId = 1;
  private pending = new Map<string, Pending>();
  private topicHandlers = new Map<string, ((payload: any) => void)[]>();
  private rawHandlers: ((msg: BridgeMessage) => void)[] = [];
  private statusHandlers: ((status: "connecting" | "open" | "closed") => void)[] = [];
  readonly sentLog: BridgeMessage[] = [];

  constructor(private factory: SocketFactory) {}

  connect(url: string): void {
    this.setStatus("connecting");
    const socket = this.factory(url);
    this.socket = socket;
    socket.addEventListener("open", () => this.setStatus("open"));
    socket.addEventListener("close", () => this.dropConnection());
    socket.addEventListener("error", () => this.dropConnection());
    socket.addEventListener("message", (ev: any) => {
      let msg: BridgeMessage;
      try {
        msg = JSON.parse(typeof ev.data === "string" ? ev.data : ev.data.toString());
      } catch {
        return; // a broken frame is the server's bug, not a reason to die
      }
      this.route(msg);
    });
  }

  close(): void {
    this.socket?.close();
    this.dropConnection();
  }

  private dropConnection(): void {
    if (this.socket === null) return;
    this.socket = null;
    this.setStatus("closed");
    const err = new BridgeError("disconnected", "gateway connection lost");
    for (const p of this.pending.values()) p.reject(err);
    this.pending.clear();
  }

  private setStatus(status: "connecting" | "open" | "closed"): void {
    for (const cb of this.statusHandlers) cb(status);
  }

  onStatus(cb: (status: "connecting" | "open" | "closed") => void): void {
    this.statusHandlers.push(cb);
  }

  onMessage(cb: (msg: BridgeMessage) => void): void {
    this.rawHandlers.push(cb);
  }

  private route(msg: BridgeMessage): void {
    for (const cb of this.rawHandlers) cb(msg);
    if (msg.op === "reply" || msg.op === "error") {
      const pending = msg.id !== undefined ? this.pending.get(msg.id) : undefined;
      if (pending !== undefined) {
        this.pending.delete(msg.id!);
        if (msg.op === "reply") pending.resolve(msg.payload);
        else pending.reject(new BridgeError(msg.payload?.code ?? "error", msg.payload?.message ?? ""));
      }
      return;
    }
    if (msg.op === "event" && msg.topic !== undefined) {
      for (const cb of this.topicHandlers.get(msg.topic) ?? []) cb(msg.payload);
    }
  }

  private post(msg: BridgeMessage): void {
    if (this.socket === null) throw new BridgeError("disconnected", "not connected");
    this.sentLog.push(msg);
    this.socket.send(JSON.stringify(msg));
  }

  call(service: string, payload: Record<string, unknown> = {}): Promise<any> {
    const id = `c${this.nextId++}`;
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      try {
        this.post({ op: "call", id, service, payload });
      } catch (err) {
        this.pending.delete(id);
        reject(err);
      }
    });
  }

  subscribe(topic: string, cb: (payload: any) => void): void {
    const handlers = this.topicHandlers.get(topic) ?? [];
    handlers.push(cb);
    this.topicHandlers.set(topic, handlers);
    if (handlers.length === 1) {
      this.post({ op: "subscribe", id: `s${this.nextId++}`, topic });
    }
  }

  unsubscribe(topic: string): void {
    if (this.topicHandlers.delete(topic)) {
      this.post({ op: "unsubscribe", topic });
    }
  }
}
