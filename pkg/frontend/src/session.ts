// Viewer session: owns the WebSocket, the desired rendering state, and the
// one-in-flight frame loop. State changes mark dirty flags; the next frame
// request first sends every dirty set_* message, so after a reconnect the
// whole state is replayed before any frame is asked for.

import { LatestWinsGate } from "./latestWins.js";
import {
  ClientMsg,
  Mode,
  ServerMsg,
  Side,
  Telemetry,
  decode,
  encode,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface FrameInfo {
  frameId: number | string;
  format: "png" | "ppm";
  width: number;
  height: number;
  imageB64: string;
  telemetry: Telemetry;
}

export interface SessionEvents {
  onStatus?: (status: ConnectionStatus) => void;
  onFrame?: (frame: FrameInfo) => void;
  onTelemetry?: (telemetry: Telemetry) => void;
  onError?: (message: string) => void;
}

/** The browser/ws-compatible subset of the WebSocket API this client needs. */
export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface ViewerStateSnapshot {
  fixation: [number, number, number];
  ipd: number;
  mode: Mode;
  gain: number;
  eyeModel: string;
  accommodated: boolean;
  resolution: [number, number];
  side: Side;
  foveate: boolean;
}

const DEFAULT_STATE: ViewerStateSnapshot = {
  fixation: [0, 0, -1],
  ipd: 0.064,
  mode: "ocular",
  gain: 1.0,
  eyeModel: "gullstrand-emsley",
  accommodated: false,
  resolution: [512, 512],
  side: "right",
  foveate: false,
};

type DirtyFlag = "gaze" | "mode" | "eyeModel" | "ipd";

export class ViewerSession {
  readonly state: ViewerStateSnapshot = { ...DEFAULT_STATE };

  /** Frame ids this session sent / saw answered, for the loss invariant. */
  readonly sentFrameIds: number[] = [];
  readonly answeredFrameIds: number[] = [];

  private ws: WebSocketLike | null = null;
  private status: ConnectionStatus = "disconnected";
  private nextFrameId = 1;
  private readonly gate = new LatestWinsGate<ViewerStateSnapshot>((snap) =>
    this.flush(snap),
  );
  private dirty = new Set<DirtyFlag>();

  constructor(
    private readonly url: string,
    private readonly events: SessionEvents = {},
    private readonly wsFactory: WebSocketFactory = (u) =>
      new WebSocket(u) as unknown as WebSocketLike,
    initialState: Partial<ViewerStateSnapshot> = {},
  ) {
    Object.assign(this.state, initialState);
  }

  get connectionStatus(): ConnectionStatus {
    return this.status;
  }

  /** Open (or reopen) the connection. Safe to call from a retry control. */
  connect(): void {
    if (this.status === "connecting" || this.status === "connected") return;
    this.setStatus("connecting");
    let ws: WebSocketLike;
    try {
      ws = this.wsFactory(this.url);
    } catch (err) {
      this.setStatus("disconnected");
      this.events.onError?.(String(err));
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.setStatus("connected");
      // Replay the full state before the next frame request.
      this.dirty = new Set<DirtyFlag>(["gaze", "mode", "eyeModel", "ipd"]);
      this.gate.reset();
      this.requestFrame();
    };
    ws.onmessage = (ev) => this.handleMessage(ev.data);
    ws.onclose = () => {
      this.ws = null;
      this.gate.reset();
      this.setStatus("disconnected");
    };
    ws.onerror = () => {
      this.events.onError?.("connection error");
    };
  }

  disconnect(): void {
    this.ws?.close();
  }

  setGaze(fixation: [number, number, number]): void {
    this.state.fixation = fixation;
    this.dirty.add("gaze");
    this.requestFrame();
  }

  setMode(mode: Mode, gain?: number): void {
    this.state.mode = mode;
    if (gain !== undefined) this.state.gain = gain;
    this.dirty.add("mode");
    this.requestFrame();
  }

  setGain(gain: number): void {
    this.state.gain = gain;
    this.dirty.add("mode");
    this.requestFrame();
  }

  setEyeModel(name: string, accommodated: boolean): void {
    this.state.eyeModel = name;
    this.state.accommodated = accommodated;
    this.dirty.add("eyeModel");
    this.requestFrame();
  }

  setIpd(ipd: number): void {
    this.state.ipd = ipd;
    this.dirty.add("ipd");
    this.requestFrame();
  }

  setFoveate(foveate: boolean): void {
    this.state.foveate = foveate;
    this.requestFrame();
  }

  /** Ask for a frame of the current state (coalesced, latest wins). */
  requestFrame(): void {
    if (this.status !== "connected") return;
    this.gate.request({ ...this.state, fixation: [...this.state.fixation] });
  }

  private flush(snap: ViewerStateSnapshot): void {
    if (!this.ws) return;
    const messages: ClientMsg[] = [];
    if (this.dirty.has("ipd")) messages.push({ kind: "set_ipd", ipd: snap.ipd });
    if (this.dirty.has("eyeModel")) {
      messages.push({
        kind: "set_eye_model",
        name: snap.eyeModel,
        accommodated: snap.accommodated,
      });
    }
    if (this.dirty.has("mode")) {
      messages.push({ kind: "set_mode", mode: snap.mode, gain: snap.gain });
    }
    if (this.dirty.has("gaze")) {
      messages.push({ kind: "set_gaze", fixation: snap.fixation });
    }
    this.dirty.clear();
    const frameId = this.nextFrameId++;
    this.sentFrameIds.push(frameId);
    messages.push({
      kind: "request_frame",
      frame_id: frameId,
      resolution: snap.resolution,
      side: snap.side,
      format: "png",
      foveate: snap.foveate,
    });
    for (const msg of messages) this.ws.send(encode(msg));
  }

  private handleMessage(data: unknown): void {
    let msg: ServerMsg;
    try {
      msg = decode(typeof data === "string" ? data : String(data));
    } catch (err) {
      this.events.onError?.(String(err));
      return;
    }
    if (msg.kind === "telemetry") {
      this.events.onTelemetry?.(msg.telemetry);
      return;
    }
    if (msg.kind === "error") {
      this.events.onError?.(msg.message);
      if (msg.frame_id !== undefined) this.gate.settled(); // failed frame, keep looping
      return;
    }
    // frame
    if (typeof msg.frame_id === "number") this.answeredFrameIds.push(msg.frame_id);
    this.events.onTelemetry?.(msg.telemetry);
    this.events.onFrame?.({
      frameId: msg.frame_id,
      format: msg.format,
      width: msg.width,
      height: msg.height,
      imageB64: msg.image_b64,
      telemetry: msg.telemetry,
    });
    this.gate.settled();
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.events.onStatus?.(status);
  }
}
