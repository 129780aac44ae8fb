// Message schema for the session protocol (version 1). Mirrors docs/protocol.md
// in the repository root; this client speaks exactly that protocol and nothing else.

export const PROTOCOL_VERSION = 1;

export type Side = "left" | "right";
export type Mode = "conventional" | "ocular" | "reversed";

export interface FrustumBounds {
  l: number;
  r: number;
  t: number;
  b: number;
  z_near: number;
  z_far: number;
}

export interface EyeTelemetry {
  nodal_point: [number, number, number];
  frustum: FrustumBounds;
}

export interface ObjectDisplacement {
  object: number;
  ndc_dx: number | null;
  ndc_dy: number | null;
}

export interface Telemetry {
  frame_counter: number;
  eyes: Record<Side, EyeTelemetry>;
  object_displacement: ObjectDisplacement[];
}

export type ServerMsg =
  | { v: 1; kind: "telemetry"; telemetry: Telemetry }
  | {
      v: 1;
      kind: "frame";
      frame_id: number | string;
      format: "png" | "ppm";
      width: number;
      height: number;
      image_b64: string;
      telemetry: Telemetry;
    }
  | { v: 1; kind: "error"; message: string; frame_id?: number | string };

export type ClientMsg =
  | { kind: "set_gaze"; fixation: [number, number, number]; ipd?: number }
  | { kind: "set_mode"; mode: Mode; gain?: number }
  | { kind: "set_eye_model"; name: string; accommodated?: boolean }
  | { kind: "set_ipd"; ipd: number }
  | { kind: "set_scene"; scene: unknown }
  | {
      kind: "request_frame";
      frame_id: number | string;
      resolution?: [number, number];
      side?: Side;
      format?: "png" | "ppm";
      foveate?: boolean;
    };

export function encode(msg: ClientMsg): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, ...msg });
}

export function decode(raw: string): ServerMsg {
  const doc = JSON.parse(raw) as ServerMsg;
  if (doc.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${String((doc as { v: unknown }).v)}`);
  }
  if (doc.kind !== "telemetry" && doc.kind !== "frame" && doc.kind !== "error") {
    throw new Error(`unknown server message kind ${String((doc as { kind: unknown }).kind)}`);
  }
  return doc;
}
