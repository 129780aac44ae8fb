// Browser entry point: wires the canvas, controls, telemetry panel and status
// banner to a ViewerSession. All protocol and interaction logic lives in the
// imported modules; this file only touches the DOM.

import { cursorToFixation, fixationEccentricityDeg } from "./gaze.js";
import { Mode, Telemetry } from "./protocol.js";
import { FrameInfo, ViewerSession } from "./session.js";

const FOV_HALF_DEG = 20; // matches the serve session's default frustum

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("frame");
const ctx = canvas.getContext("2d")!;
const banner = el<HTMLDivElement>("banner");
const retryButton = el<HTMLButtonElement>("retry");
const telemetryPanel = el<HTMLPreElement>("telemetry");
const depthSlider = el<HTMLInputElement>("depth");
const depthValue = el<HTMLSpanElement>("depth-value");
const gainSlider = el<HTMLInputElement>("gain");
const gainValue = el<HTMLSpanElement>("gain-value");
const ipdSlider = el<HTMLInputElement>("ipd");
const ipdValue = el<HTMLSpanElement>("ipd-value");
const eyeModelSelect = el<HTMLSelectElement>("eye-model");
const accommodatedBox = el<HTMLInputElement>("accommodated");
const foveateBox = el<HTMLInputElement>("foveate");
const gazeReadout = el<HTMLSpanElement>("gaze-readout");

const wsUrl = new URLSearchParams(location.search).get("server") ?? "ws://127.0.0.1:8601";

const session = new ViewerSession(wsUrl, {
  onStatus: (status) => {
    banner.dataset.status = status;
    banner.textContent =
      status === "connected" ? `connected to ${wsUrl}` : `${status} (${wsUrl})`;
    retryButton.hidden = status !== "disconnected";
  },
  onFrame: drawFrame,
  onTelemetry: showTelemetry,
  onError: (message) => {
    banner.dataset.status = "error";
    banner.textContent = `error: ${message}`;
  },
});

function drawFrame(frame: FrameInfo): void {
  const img = new Image();
  img.onload = () => {
    canvas.width = frame.width;
    canvas.height = frame.height;
    // Byte-faithful: draw 1:1; if the page shows the canvas smaller, CSS
    // integer scaling (below) handles it without resampling the pixels here.
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(img, 0, 0);
    applyIntegerScale(frame.width, frame.height);
  };
  img.src = `data:image/png;base64,${frame.imageB64}`;
}

function applyIntegerScale(w: number, h: number): void {
  const holder = canvas.parentElement!;
  const available = Math.min(holder.clientWidth, holder.clientHeight || Infinity);
  if (available >= w) {
    canvas.style.width = `${w}px`;
    canvas.style.height = `${h}px`;
    return;
  }
  const divisor = Math.ceil(w / available);
  canvas.style.width = `${Math.floor(w / divisor)}px`;
  canvas.style.height = `${Math.floor(h / divisor)}px`;
}

function showTelemetry(t: Telemetry): void {
  const fmt = (v: number) => v.toFixed(6);
  const lines: string[] = [`frame ${t.frame_counter}`];
  for (const side of ["left", "right"] as const) {
    const eye = t.eyes[side];
    lines.push(`${side} nodal  [${eye.nodal_point.map(fmt).join(", ")}] m`);
    const f = eye.frustum;
    lines.push(
      `${side} frustum l=${fmt(f.l)} r=${fmt(f.r)} t=${fmt(f.t)} b=${fmt(f.b)}`,
    );
  }
  for (const d of t.object_displacement) {
    const dx = d.ndc_dx === null ? "n/a" : fmt(d.ndc_dx);
    const dy = d.ndc_dy === null ? "n/a" : fmt(d.ndc_dy);
    lines.push(`object ${d.object}  displacement ndc (${dx}, ${dy})`);
  }
  telemetryPanel.textContent = lines.join("\n");
}

// --- gaze dragging ---------------------------------------------------------

let dragging = false;

function sendGazeFromPointer(ev: PointerEvent): void {
  const rect = canvas.getBoundingClientRect();
  const xNorm = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
  const yNorm = ((ev.clientY - rect.top) / rect.height) * 2 - 1;
  const fixation = cursorToFixation(xNorm, yNorm, FOV_HALF_DEG, Number(depthSlider.value));
  session.setGaze(fixation);
  gazeReadout.textContent =
    `az/el ecc ${fixationEccentricityDeg(fixation).toFixed(1)} deg, ` +
    `depth ${Number(depthSlider.value).toFixed(2)} D`;
}

canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  canvas.setPointerCapture(ev.pointerId);
  sendGazeFromPointer(ev);
});
canvas.addEventListener("pointermove", (ev) => {
  if (dragging) sendGazeFromPointer(ev);
});
canvas.addEventListener("pointerup", (ev) => {
  dragging = false;
  canvas.releasePointerCapture(ev.pointerId);
});

// --- controls ----------------------------------------------------------------

for (const radio of document.querySelectorAll<HTMLInputElement>("input[name=mode]")) {
  radio.addEventListener("change", () => {
    if (radio.checked) session.setMode(radio.value as Mode, Number(gainSlider.value));
  });
}

depthSlider.addEventListener("input", () => {
  depthValue.textContent = `${Number(depthSlider.value).toFixed(2)} D`;
});
gainSlider.addEventListener("input", () => {
  gainValue.textContent = `x${Number(gainSlider.value).toFixed(2)}`;
  session.setGain(Number(gainSlider.value));
});
ipdSlider.addEventListener("input", () => {
  ipdValue.textContent = `${(Number(ipdSlider.value) * 1000).toFixed(1)} mm`;
  session.setIpd(Number(ipdSlider.value));
});
eyeModelSelect.addEventListener("change", () => {
  session.setEyeModel(eyeModelSelect.value, accommodatedBox.checked);
});
accommodatedBox.addEventListener("change", () => {
  accommodatedBox.disabled = eyeModelSelect.value === "emsley";
  session.setEyeModel(eyeModelSelect.value, accommodatedBox.checked);
});
foveateBox.addEventListener("change", () => session.setFoveate(foveateBox.checked));
retryButton.addEventListener("click", () => session.connect());

// A/B comparison: toggle conventional vs ocular while the gaze stays put.
document.addEventListener("keydown", (ev) => {
  if (ev.key !== "a") return;
  const next: Mode = session.state.mode === "conventional" ? "ocular" : "conventional";
  const radio = document.querySelector<HTMLInputElement>(`input[name=mode][value=${next}]`);
  if (radio) radio.checked = true;
  session.setMode(next, Number(gainSlider.value));
});

session.connect();
