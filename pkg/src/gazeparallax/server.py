"""Session protocol server: JSON messages over a WebSocket, one session per connection.

The server is read-compute-reply: every state-changing message is answered
with a telemetry snapshot, every request_frame with exactly one frame
message carrying the request's frame id. It never pushes frames on its own,
so a recorded message trace fully determines the reply trace. See
docs/protocol.md for the message schema (version 1).
"""

from __future__ import annotations

import asyncio
import base64
import json
from dataclasses import dataclass, field

import numpy as np

from . import retinal
from .eye_model import SchematicEyeModel, get_model
from .transforms import (
    DisplayGeometry,
    GazeState,
    RenderMode,
    eye_and_projection,
    project_point,
)

PROTOCOL_VERSION = 1
MAX_RESOLUTION = 1024
DEFAULT_RESOLUTION = (512, 512)


@dataclass
class SessionState:
    scene: retinal.Scene
    fixation: tuple[float, float, float] = (0.0, 0.0, -1.0)
    ipd: float = 0.064
    mode: RenderMode = field(default_factory=RenderMode.ocular_parallax)
    model: SchematicEyeModel = field(default_factory=lambda: get_model("gullstrand-emsley"))
    geom: DisplayGeometry = field(default_factory=lambda: DisplayGeometry.symmetric(20.0))
    resolution: tuple[int, int] = DEFAULT_RESOLUTION
    side: str = "right"
    frame_counter: int = 0

    def gaze(self) -> GazeState:
        return GazeState(fixation=np.array(self.fixation), ipd=self.ipd, mode=self.mode)

    def baseline_gaze(self) -> GazeState:
        """Centered gaze at the same fixation distance; displacement reference."""
        distance = float(np.linalg.norm(np.asarray(self.fixation)))
        return GazeState(fixation=np.array([0.0, 0.0, -distance]), ipd=self.ipd, mode=self.mode)


def _telemetry(state: SessionState) -> dict:
    gaze = state.gaze()
    baseline = state.baseline_gaze()
    out: dict = {"frame_counter": state.frame_counter, "eyes": {}}
    for side in ("left", "right"):
        ep = eye_and_projection(gaze, state.model, state.geom, side)
        f = ep.frustum
        out["eyes"][side] = {
            "nodal_point": [float(v) for v in ep.nodal_point],
            "frustum": {"l": f.l, "r": f.r, "t": f.t, "b": f.b,
                        "z_near": f.z_near, "z_far": f.z_far},
        }
    ep_base = eye_and_projection(baseline, state.model, state.geom, state.side)
    ep_cur = eye_and_projection(gaze, state.model, state.geom, state.side)
    displacements = []
    for index, obj in enumerate(state.scene.objects):
        center = obj.center_head
        try:
            delta = project_point(center, ep_cur) - project_point(center, ep_base)
            displacements.append({"object": index, "ndc_dx": float(delta[0]), "ndc_dy": float(delta[1])})
        except ValueError:
            displacements.append({"object": index, "ndc_dx": None, "ndc_dy": None})
    out["object_displacement"] = displacements
    return out


def _error(message: str, frame_id=None) -> str:
    doc = {"v": PROTOCOL_VERSION, "kind": "error", "message": message}
    if frame_id is not None:
        doc["frame_id"] = frame_id
    return json.dumps(doc)


def _telemetry_message(state: SessionState) -> str:
    return json.dumps({"v": PROTOCOL_VERSION, "kind": "telemetry", "telemetry": _telemetry(state)})


def _apply(state: SessionState, doc: dict) -> None:
    kind = doc["kind"]
    if kind == "set_gaze":
        fixation = tuple(float(v) for v in doc["fixation"])
        ipd = float(doc.get("ipd", state.ipd))
        GazeState(fixation=np.array(fixation), ipd=ipd, mode=state.mode)  # validate first
        state.fixation = fixation
        state.ipd = ipd
    elif kind == "set_mode":
        mode = doc["mode"]
        gain = float(doc.get("gain", 1.0))
        if mode == "conventional":
            state.mode = RenderMode.conventional()
        elif mode == "ocular":
            state.mode = RenderMode.ocular_parallax(gain)
        elif mode == "reversed":
            state.mode = RenderMode.reversed_ocular(gain)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    elif kind == "set_eye_model":
        state.model = get_model(doc["name"], bool(doc.get("accommodated", False)))
    elif kind == "set_ipd":
        ipd = float(doc["ipd"])
        if ipd < 0:
            raise ValueError("ipd must be >= 0")
        state.ipd = ipd
    elif kind == "set_scene":
        state.scene = retinal.scene_from_dict(doc["scene"])
    else:
        raise ValueError(f"unknown message kind {kind!r}")


def _render_frame(state: SessionState, doc: dict) -> dict:
    resolution = tuple(int(v) for v in doc.get("resolution", state.resolution))
    if resolution[0] > MAX_RESOLUTION or resolution[1] > MAX_RESOLUTION:
        raise ValueError(f"resolution capped at {MAX_RESOLUTION}x{MAX_RESOLUTION}")
    state.resolution = resolution
    side = doc.get("side", state.side)
    img = retinal.render(state.scene, state.gaze(), state.model, state.geom, resolution, side=side)
    if doc.get("foveate"):
        from .perception import AcuityModel

        img = retinal.foveate(img, AcuityModel())
    fmt = doc.get("format", "png")
    if fmt == "ppm":
        payload = retinal.ppm_bytes(img)
    elif fmt == "png":
        payload = retinal.png_bytes(img)
    else:
        raise ValueError(f"unknown frame format {fmt!r}")
    state.frame_counter += 1
    return {
        "v": PROTOCOL_VERSION,
        "kind": "frame",
        "frame_id": doc.get("frame_id"),
        "format": fmt,
        "width": img.width,
        "height": img.height,
        "image_b64": base64.b64encode(payload).decode("ascii"),
        "telemetry": _telemetry(state),
    }


async def _handle_session(websocket, scene: retinal.Scene) -> None:
    state = SessionState(scene=scene)
    loop = asyncio.get_running_loop()
    await websocket.send(_telemetry_message(state))
    async for raw in websocket:
        frame_id = None
        try:
            doc = json.loads(raw)
            if not isinstance(doc, dict) or "kind" not in doc:
                raise ValueError("message must be an object with a 'kind' field")
            if doc.get("v", PROTOCOL_VERSION) != PROTOCOL_VERSION:
                raise ValueError(f"unsupported protocol version {doc.get('v')!r}")
            frame_id = doc.get("frame_id")
            if doc["kind"] == "request_frame":
                reply = await loop.run_in_executor(None, _render_frame, state, doc)
                await websocket.send(json.dumps(reply))
            else:
                _apply(state, doc)
                await websocket.send(_telemetry_message(state))
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            await websocket.send(_error(str(exc), frame_id))


async def _serve_forever(host: str, port: int, scene: retinal.Scene) -> None:
    from websockets.asyncio.server import serve

    async def handler(websocket):
        await _handle_session(websocket, scene)

    async with serve(handler, host, port):
        print(f"gazeparallax serve: ws://{host}:{port} (protocol v{PROTOCOL_VERSION})", flush=True)
        await asyncio.Future()


def run_server(host: str, port: int, scene: retinal.Scene | None = None) -> None:
    """Serve sessions until interrupted."""
    if scene is None:
        scene = retinal.default_scene()
    try:
        asyncio.run(_serve_forever(host, port, scene))
    except KeyboardInterrupt:
        pass
