// Newline-JSON protocol client with request-id correlation.
//
// The engine speaks one JSON envelope per line over a TCP socket; the browser
// reaches it through the WebSocket bridge, which relays one envelope per
// message. Every request gets exactly one response addressed by request_id;
// responses for unknown ids are logged and dropped.

export type Op =
  | "generate"
  | "edit"
  | "import_pose"
  | "list_gallery"
  | "add_to_gallery"
  | "get_sequence"
  | "export";

export interface RequestEnvelope {
  request_id: string;
  op: Op;
  params: Record<string, unknown>;
  seed?: number;
}

export interface ErrorPayload {
  code: string;
  message: string;
  byte_offset?: number;
}

export interface ResponseEnvelope {
  request_id: string | null;
  status: "ok" | "error";
  payload: Record<string, unknown>;
}

export interface MotionJson {
  format_version: number;
  fps: number;
  joint_names: string[];
  parents: number[];
  rest_offsets: number[][];
  frames: number[][];
}

export interface VariantInfo {
  id: string;
  frames: number;
  duration_s: number;
}

export interface GalleryItem {
  id: string;
  thumbnail: string;
  duration_s: number;
}

/** Transport over which envelope lines travel (WebSocket in the browser,
 * a scripted mock in tests). */
export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
}

export class ProtocolError extends Error {
  constructor(readonly payload: ErrorPayload) {
    super(payload.message);
  }
}

interface Pending {
  resolve: (payload: Record<string, unknown>) => void;
  reject: (err: ProtocolError) => void;
}

export class ProtocolClient {
  private pending = new Map<string, Pending>();
  private counter = 0;
  readonly dropped: string[] = []; // unknown request ids, for diagnostics

  constructor(
    private readonly transport: Transport,
    private readonly log: (msg: string) => void = (msg) => console.warn(msg),
  ) {
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => this.failAll("connection closed"));
  }

  nextRequestId(): string {
    this.counter += 1;
    return `ui-${this.counter}`;
  }

  get pendingCount(): number {
    return this.pending.size;
  }

  request(op: Op, params: Record<string, unknown>): Promise<Record<string, unknown>> {
    const envelope: RequestEnvelope = { request_id: this.nextRequestId(), op, params };
    return new Promise((resolve, reject) => {
      this.pending.set(envelope.request_id, { resolve, reject });
      this.transport.send(JSON.stringify(envelope));
    });
  }

  private handleLine(line: string): void {
    let response: ResponseEnvelope;
    try {
      response = JSON.parse(line) as ResponseEnvelope;
    } catch {
      this.log(`undecodable response line dropped: ${line.slice(0, 80)}`);
      return;
    }
    const id = response.request_id ?? "";
    const pending = this.pending.get(id);
    if (!pending) {
      this.dropped.push(id);
      this.log(`response for unknown request_id ${id} dropped`);
      return;
    }
    this.pending.delete(id);
    if (response.status === "ok") {
      pending.resolve(response.payload);
    } else {
      pending.reject(new ProtocolError(response.payload as unknown as ErrorPayload));
    }
  }

  private failAll(reason: string): void {
    for (const [, pending] of this.pending) {
      pending.reject(new ProtocolError({ code: "connection_closed", message: reason }));
    }
    this.pending.clear();
  }
}

/** Browser transport: one envelope per WebSocket message, relayed by the bridge. */
export class WebSocketTransport implements Transport {
  private lineHandler: (line: string) => void = () => {};
  private closeHandler: () => void = () => {};
  private queue: string[] = [];
  private open = false;

  constructor(private readonly socket: WebSocket) {
    socket.addEventListener("open", () => {
      this.open = true;
      for (const line of this.queue.splice(0)) socket.send(line);
    });
    socket.addEventListener("message", (event) => {
      for (const line of String(event.data).split("\n")) {
        if (line.trim()) this.lineHandler(line);
      }
    });
    socket.addEventListener("close", () => this.closeHandler());
  }

  send(line: string): void {
    if (this.open) this.socket.send(line);
    else this.queue.push(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}
