// Browser bridge: serves the static UI and relays newline-JSON envelopes
// between WebSocket clients and the engine's TCP socket, one TCP connection
// per WebSocket so the engine sees ordinary protocol clients.
//
//   node dist/bridge.js --listen 8080 --engine-host 127.0.0.1 --engine-port 7701

import * as fs from "fs";
import * as http from "http";
import * as net from "net";
import * as path from "path";
import { WebSocketServer, WebSocket } from "ws";

interface BridgeConfig {
  listen: number;
  engineHost: string;
  enginePort: number;
  staticRoot: string;
}

export function parseArgs(argv: string[]): BridgeConfig {
  const config: BridgeConfig = {
    listen: 8080,
    engineHost: "127.0.0.1",
    enginePort: 7701,
    staticRoot: path.resolve(__dirname, ".."),
  };
  for (let i = 0; i < argv.length; i++) {
    const next = () => argv[++i];
    if (argv[i] === "--listen") config.listen = Number(next());
    else if (argv[i] === "--engine-host") config.engineHost = next();
    else if (argv[i] === "--engine-port") config.enginePort = Number(next());
    else if (argv[i] === "--static-root") config.staticRoot = path.resolve(next());
  }
  return config;
}

const MIME: Record<string, string> = {
  ".html": "text/html",
  ".js": "text/javascript",
  ".css": "text/css",
  ".json": "application/json",
  ".png": "image/png",
};

function serveStatic(root: string, req: http.IncomingMessage, res: http.ServerResponse): void {
  const urlPath = (req.url ?? "/").split("?")[0];
  const rel = urlPath === "/" ? "index.html" : urlPath.replace(/^\/+/, "");
  const file = path.join(root, rel);
  if (!file.startsWith(root) || !fs.existsSync(file) || !fs.statSync(file).isFile()) {
    res.writeHead(404);
    res.end("not found");
    return;
  }
  res.writeHead(200, { "content-type": MIME[path.extname(file)] ?? "application/octet-stream" });
  fs.createReadStream(file).pipe(res);
}

/** Relay one WebSocket client onto one fresh TCP connection to the engine. */
export function attachRelay(ws: WebSocket, engineHost: string, enginePort: number): net.Socket {
  const tcp = net.createConnection({ host: engineHost, port: enginePort });
  let buffer = "";

  tcp.on("data", (chunk) => {
    buffer += chunk.toString("utf-8");
    let at: number;
    while ((at = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, at);
      buffer = buffer.slice(at + 1);
      if (line.trim() && ws.readyState === WebSocket.OPEN) ws.send(line);
    }
  });
  tcp.on("close", () => ws.close());
  tcp.on("error", () => ws.close());

  ws.on("message", (data) => {
    const text = data.toString();
    tcp.write(text.endsWith("\n") ? text : text + "\n");
  });
  ws.on("close", () => tcp.destroy());
  return tcp;
}

export function startBridge(config: BridgeConfig): http.Server {
  const server = http.createServer((req, res) => serveStatic(config.staticRoot, req, res));
  const wss = new WebSocketServer({ server, path: "/ws" });
  wss.on("connection", (ws) => attachRelay(ws, config.engineHost, config.enginePort));
  server.listen(config.listen, () => {
    console.log(`bridge listening on http://127.0.0.1:${config.listen}`
      + ` -> tcp ${config.engineHost}:${config.enginePort}`);
  });
  return server;
}

if (require.main === module) {
  startBridge(parseArgs(process.argv.slice(2)));
}
