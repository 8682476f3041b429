// Browser bootstrap: native WebSocket, URL-driven configuration.

import { ConsoleApp } from "./view.js";

const app = new ConsoleApp(document, (url) => new WebSocket(url));

const params = new URLSearchParams(window.location.search);
const gateway =
  params.get("gateway") ?? `ws://${window.location.host || "127.0.0.1:9091"}/bridge`;
(document.getElementById("gateway-url") as HTMLInputElement).value = gateway;
const sid = params.get("session");
if (sid !== null) {
  (document.getElementById("session-id") as HTMLInputElement).value = sid;
}
if (params.get("autoconnect") !== "0") {
  app.connect(gateway, sid);
}

declare global {
  interface Window {
    harrowConsole: ConsoleApp;
  }
}
window.harrowConsole = app;
