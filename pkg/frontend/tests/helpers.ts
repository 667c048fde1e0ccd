// Scripted mock server: a Transport whose replies are driven by a handler,
// plus a tiny valid motion document builder.

import type { MotionJson, RequestEnvelope, Transport } from "../src/protocol";

export type MockHandler = (envelope: RequestEnvelope) =>
  | { status: "ok"; payload: Record<string, unknown> }
  | { status: "error"; payload: { code: string; message: string } }
  | null; // null = stay silent (pending forever)

export class MockTransport implements Transport {
  readonly sent: string[] = [];
  private lineHandler: (line: string) => void = () => {};
  private closeHandler: () => void = () => {};

  constructor(private readonly handler: MockHandler = () => null) {}

  send(line: string): void {
    this.sent.push(line);
    const envelope = JSON.parse(line) as RequestEnvelope;
    const scripted = this.handler(envelope);
    if (!scripted) return;
    const response = JSON.stringify({ request_id: envelope.request_id, ...scripted });
    queueMicrotask(() => this.lineHandler(response));
  }

  pushLine(line: string): void {
    this.lineHandler(line);
  }

  close(): void {
    this.closeHandler();
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}

const JOINT_NAMES = [
  "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
  "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
  "neck", "left_collar", "right_collar", "head", "left_shoulder",
  "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
];
const PARENTS = [-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19];

/** Identity-pose motion document with simple per-joint offsets. */
export function makeMotionDoc(frameCount = 2): MotionJson {
  const offsets = PARENTS.map((_, j) => (j === 0 ? [0, 0, 0] : [0.02 * j, -0.05, 0]));
  const identity6 = [1, 0, 0, 0, 1, 0];
  const row = [0, 0, 0, ...Array.from({ length: 22 }, () => identity6).flat()];
  return {
    format_version: 1,
    fps: 20,
    joint_names: JOINT_NAMES.slice(),
    parents: PARENTS.slice(),
    rest_offsets: offsets,
    frames: Array.from({ length: frameCount }, () => row.slice()),
  };
}

/** Handler scripting the happy-path engine: generate, get, edit, export. */
export function happyEngineHandler(): MockHandler {
  let nextSeq = 0;
  const frameCounts = new Map<string, number>();
  return (envelope) => {
    const params = envelope.params as Record<string, unknown>;
    if (envelope.op === "generate") {
      const frames = Math.round((params.duration_s as number) * 20);
      const ids = ["v1", "v2", "v3"].map((s) => `${s}-${nextSeq}`);
      nextSeq += 1;
      for (const id of ids) frameCounts.set(id, frames);
      return {
        status: "ok",
        payload: {
          ids,
          variants: ids.map((id) => ({ id, frames, duration_s: frames / 20 })),
        },
      };
    }
    if (envelope.op === "get_sequence") {
      const id = params.id as string;
      return {
        status: "ok",
        payload: {
          id,
          frames: frameCounts.get(id) ?? 2,
          duration_s: (frameCounts.get(id) ?? 2) / 20,
          motion: makeMotionDoc(frameCounts.get(id) ?? 2),
        },
      };
    }
    if (envelope.op === "edit") {
      const id = `edited-${nextSeq}`;
      nextSeq += 1;
      frameCounts.set(id, 60);
      return { status: "ok", payload: { id, frames: 60, duration_s: 3.0 } };
    }
    if (envelope.op === "list_gallery") {
      return { status: "ok", payload: { items: [] } };
    }
    if (envelope.op === "add_to_gallery") {
      return { status: "ok", payload: { id: params.id, in_gallery: true } };
    }
    if (envelope.op === "import_pose") {
      const id = `imported-${nextSeq}`;
      nextSeq += 1;
      frameCounts.set(id, (params.motion_json as MotionJson).frames.length);
      return { status: "ok", payload: { id, frames: 2, duration_s: 0.1 } };
    }
    if (envelope.op === "export") {
      const id = params.id as string;
      if (params.format === "gltf") {
        return {
          status: "ok",
          payload: {
            format: "gltf",
            filename: `${id}.gltf`,
            gltf_base64: Buffer.from('{"asset":{"version":"2.0"}}').toString("base64"),
          },
        };
      }
      if (params.format === "motion-json") {
        return {
          status: "ok",
          payload: { format: "motion-json", filename: `${id}.motion.json`,
                     motion: makeMotionDoc(2) },
        };
      }
      return { status: "ok", payload: { format: "frames", fps: 20, every_k: 1,
                                        count: 0, frames: [] } };
    }
    return { status: "error", payload: { code: "unknown_op", message: "unknown op" } };
  };
}
