import { SessionClient, webSocketTransport } from "./protocol.js";
import { App } from "./ui.js";
import { createViewer } from "./viewer.js";

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server") ?? "ws://127.0.0.1:8077";
}

async function boot(): Promise<void> {
  const viewport = document.getElementById("viewport")!;
  const panel = document.getElementById("panel")!;
  const status = document.getElementById("status")!;
  const url = serverUrl();
  status.textContent = `connecting to ${url} ...`;
  try {
    const transport = await webSocketTransport(url);
    const client = new SessionClient(transport);
    const viewer = createViewer(viewport);
    const app = new App(client, viewer, panel);
    await app.start();
    status.textContent = url;
    transport.onClose(() => {
      status.textContent = `${url} (disconnected)`;
    });
  } catch (err) {
    status.textContent = `failed to connect to ${url}: ${err}. ` +
      "Start the service with: semisimp serve model.obj --port 8077";
  }
}

void boot();
