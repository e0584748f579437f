/**
 * Browser entry point: mount the console against the serving host, or
 * against an explicit `?server=host:port` when the page is served
 * statically from somewhere else.
 */

import { App } from "./app.js";

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    const host = new URLSearchParams(location.search).get("server") ?? location.host;
    const proto = location.protocol === "https:" ? "wss" : "ws";
    new App(root, {
      url: `${proto}://${host}/ws`,
      wsFactory: (url) => new WebSocket(url),
    });
  }
}
