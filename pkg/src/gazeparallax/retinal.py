"""Deterministic CPU renderer for simulated retinal/display images.

Stimuli are frontoparallel planar objects (discs and textured quads), so a
painter's pass over depth-sorted planes is exact; no z-buffer is involved.
Each pixel is 4x supersampled (2x2 grid) and every sample is traced through
the same eye/projection transforms the real pipeline uses, which keeps the
rendered micro parallax and the analytic screen-displacement numbers in
agreement. All randomness (noise textures) flows from explicit seeds, so
identical inputs give bit-identical images.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .eye_model import SchematicEyeModel
from .perception import AcuityModel
from .psychophysics import FixationOrbit
from .transforms import DisplayGeometry, EyeProjection, GazeState, eye_and_projection

SCENE_SCHEMA_VERSION = 1
_NOISE_RES = 256
SUPERSAMPLE = 2  # per axis; 4 samples per pixel


@dataclass(frozen=True)
class Texture:
    """Solid color, seeded white noise, or an external image reference."""

    kind: str  # "solid" | "noise" | "image"
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0
    ref: str = ""

    def __post_init__(self):
        if self.kind not in ("solid", "noise", "image"):
            raise ValueError(f"unknown texture kind {self.kind!r}")

    @classmethod
    def solid(cls, r: float, g: float, b: float) -> "Texture":
        return cls("solid", color=(r, g, b))

    @classmethod
    def white_noise(cls, seed: int) -> "Texture":
        return cls("noise", seed=seed)


@dataclass(frozen=True)
class SceneObject:
    """Frontoparallel disc or quad, angle-constant: physical size follows depth.

    Depth is stored in diopters (the canonical unit); ``depth_m`` converts.
    ``angular_size_deg`` is the full subtended angle, so the physical radius
    or half-side is depth_m * tan(angular_size/2). ``lateral_deg`` is
    (azimuth, elevation) of the object center.
    """

    kind: str  # "disc" | "textured_quad"
    depth_diopters: float
    angular_size_deg: float
    texture: Texture
    lateral_deg: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("disc", "textured_quad"):
            raise ValueError(f"unknown object kind {self.kind!r}")
        if self.depth_diopters <= 0.0:
            raise ValueError("object depth must be strictly positive diopters")
        if self.angular_size_deg <= 0.0:
            raise ValueError("angular size must be positive")

    @classmethod
    def at_meters(cls, kind: str, depth_m: float, **kwargs) -> "SceneObject":
        return cls(kind=kind, depth_diopters=1.0 / depth_m, **kwargs)

    @property
    def depth_m(self) -> float:
        return 1.0 / self.depth_diopters

    @property
    def half_size_m(self) -> float:
        return self.depth_m * math.tan(math.radians(self.angular_size_deg / 2.0))

    @property
    def center_head(self) -> np.ndarray:
        az, el = (math.radians(a) for a in self.lateral_deg)
        z = self.depth_m
        return np.array([z * math.tan(az), z * math.tan(el), -z])


@dataclass(frozen=True)
class Background:
    """Solid color or an infinite checkered plane indexed by view direction."""

    kind: str = "solid"  # "solid" | "infinite_plane"
    color: tuple[float, float, float] = (0.0, 0.0, 0.0)
    color2: tuple[float, float, float] = (0.35, 0.35, 0.35)
    period_deg: float = 5.0

    def __post_init__(self):
        if self.kind not in ("solid", "infinite_plane"):
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.period_deg <= 0.0:
            raise ValueError("checker period must be positive")


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...] = ()
    background: Background = field(default_factory=Background)
    fixation_orbit: FixationOrbit | None = None


@dataclass(frozen=True)
class RetinalImage:
    pixels: np.ndarray  # (height, width, 3) uint8
    fov_deg: float  # total horizontal field of view the image subtends
    gaze: GazeState

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


def _noise_texture(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.random((_NOISE_RES, _NOISE_RES), dtype=np.float64)


def _sample_texture(tex: Texture, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Color for local coordinates u, v in [-1, 1] across the object."""
    out = np.empty(u.shape + (3,))
    if tex.kind == "solid":
        out[:] = tex.color
        return out
    if tex.kind == "noise":
        grid = _noise_texture(tex.seed)
        iu = np.clip(((u + 1.0) * 0.5 * _NOISE_RES).astype(int), 0, _NOISE_RES - 1)
        iv = np.clip(((v + 1.0) * 0.5 * _NOISE_RES).astype(int), 0, _NOISE_RES - 1)
        gray = grid[iv, iu]
        return np.repeat(gray[..., None], 3, axis=-1)
    raise NotImplementedError("image-backed textures are resolved by the caller")


def _background_colors(bg: Background, tan_x: np.ndarray, tan_y: np.ndarray) -> np.ndarray:
    out = np.empty(tan_x.shape + (3,))
    if bg.kind == "solid":
        out[:] = bg.color
        return out
    az = np.degrees(np.arctan(tan_x))
    el = np.degrees(np.arctan(tan_y))
    cell = np.floor(az / bg.period_deg) + np.floor(el / bg.period_deg)
    checker = (cell.astype(int) % 2) == 0
    out[:] = bg.color2
    out[checker] = bg.color
    return out


def render(
    scene: Scene,
    gaze: GazeState,
    model: SchematicEyeModel,
    geom: DisplayGeometry,
    resolution: tuple[int, int],
    side: str = "right",
) -> RetinalImage:
    """Rasterize the scene through one eye's gaze-dependent transforms.

    Objects are drawn back to front by depth; an empty scene yields the
    background only. Output is deterministic for fixed seeds.
    """
    width, height = int(resolution[0]), int(resolution[1])
    if width <= 0 or height <= 0:
        raise ValueError("resolution must be positive")

    ep: EyeProjection = eye_and_projection(gaze, model, geom, side)
    f = ep.frustum
    t_vec = ep.eye_matrix[:3, 3]  # eye-space = head-space + t_vec

    ss = SUPERSAMPLE
    # Supersample centers in NDC; row 0 is the top of the image (+y up).
    xs = (np.arange(width * ss) + 0.5) / (width * ss) * 2.0 - 1.0
    ys = 1.0 - (np.arange(height * ss) + 0.5) / (height * ss) * 2.0
    ndc_x, ndc_y = np.meshgrid(xs, ys)

    # Near-plane coordinates of each sample ray.
    x_n = f.l + (ndc_x + 1.0) * 0.5 * (f.r - f.l)
    y_n = f.b + (ndc_y + 1.0) * 0.5 * (f.t - f.b)
    tan_x = x_n / f.z_near
    tan_y = y_n / f.z_near

    buf = _background_colors(scene.background, tan_x, tan_y)

    for obj in sorted(scene.objects, key=lambda o: o.depth_m, reverse=True):
        center = obj.center_head
        plane_z_eye = -obj.depth_m + t_vec[2]
        if plane_z_eye >= 0.0:
            continue  # plane behind the projection center
        s = plane_z_eye / (-f.z_near)
        hit_x = x_n * s - t_vec[0]  # back to head space
        hit_y = y_n * s - t_vec[1]
        u = (hit_x - center[0]) / obj.half_size_m
        v = (hit_y - center[1]) / obj.half_size_m
        if obj.kind == "disc":
            inside = u * u + v * v <= 1.0
        else:
            inside = (np.abs(u) <= 1.0) & (np.abs(v) <= 1.0)
        if not inside.any():
            continue
        colors = _sample_texture(obj.texture, u[inside], v[inside])
        buf[inside] = colors

    # Box-average the 2x2 samples per pixel.
    avg = buf.reshape(height, ss, width, ss, 3).mean(axis=(1, 3))
    pixels = np.clip(np.rint(avg * 255.0), 0, 255).astype(np.uint8)
    fov_deg = geom.fov_left + geom.fov_right
    return RetinalImage(pixels=pixels, fov_deg=fov_deg, gaze=gaze)


def _pixel_eccentricity_deg(img: RetinalImage) -> np.ndarray:
    """Angular distance of every pixel from the fixation direction, degrees."""
    w, h = img.width, img.height
    half_fov = math.radians(img.fov_deg / 2.0)
    tan_half = math.tan(half_fov)
    xs = ((np.arange(w) + 0.5) / w * 2.0 - 1.0) * tan_half
    ys = (1.0 - (np.arange(h) + 0.5) / h * 2.0) * tan_half * (h / w)
    tx, ty = np.meshgrid(xs, ys)
    dirs = np.stack([tx, ty, -np.ones_like(tx)], axis=-1)
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)

    g = img.gaze.fixation / np.linalg.norm(img.gaze.fixation)
    cosang = np.clip(dirs @ g, -1.0, 1.0)
    return np.degrees(np.arccos(cosang))


def foveate(img: RetinalImage, acuity: AcuityModel) -> RetinalImage:
    """Eccentricity-dependent Gaussian blur: sigma = MAR(e)/2, converted to pixels.

    A stack of uniformly blurred copies at increasing sigma is blended
    per pixel, which keeps the operation a deterministic per-pixel map. The
    blur law is a display-side visualization heuristic, not a retinal model.
    """
    ecc = _pixel_eccentricity_deg(img)
    if ecc.min() > img.fov_deg / 2.0:
        raise ValueError("gaze point lies outside the image field of view")

    px_per_deg = img.width / img.fov_deg
    mar_deg = acuity.omega0 + acuity.m * ecc  # vectorized mar()
    sigma_px = mar_deg / 2.0 * px_per_deg

    src = img.pixels.astype(np.float64)
    s_min, s_max = float(sigma_px.min()), float(sigma_px.max())
    if s_max - s_min < 1e-9:
        blurred = np.stack([gaussian_filter(src[..., c], s_min, mode="nearest") for c in range(3)], axis=-1)
        out = blurred
    else:
        levels = np.linspace(s_min, s_max, 10)
        stack = np.stack(
            [
                np.stack([gaussian_filter(src[..., c], s, mode="nearest") for c in range(3)], axis=-1)
                for s in levels
            ]
        )
        idx = np.clip((sigma_px - s_min) / (s_max - s_min) * (len(levels) - 1), 0, len(levels) - 1)
        lo = np.floor(idx).astype(int)
        hi = np.minimum(lo + 1, len(levels) - 1)
        w_hi = (idx - lo)[..., None]
        rows, cols = np.indices(ecc.shape)
        out = stack[lo, rows, cols] * (1.0 - w_hi) + stack[hi, rows, cols] * w_hi

    return RetinalImage(
        pixels=np.clip(np.rint(out), 0, 255).astype(np.uint8),
        fov_deg=img.fov_deg,
        gaze=img.gaze,
    )


def _disc_outline_ndc(obj: SceneObject, ep: EyeProjection) -> tuple[np.ndarray, float, float]:
    """(center_xy, radius, y_scale) of a disc's projected outline in NDC.

    y is rescaled by P00/P11 so the projected ellipse becomes a circle; both
    discs of a coaxial pair share that scale, so intersection areas are exact.
    """
    p00 = ep.projection_matrix[0, 0]
    p11 = ep.projection_matrix[1, 1]
    t_vec = ep.eye_matrix[:3, 3]
    center = obj.center_head
    z_fwd = obj.depth_m - t_vec[2]
    if z_fwd <= 0.0:
        raise ValueError("disc is behind the projection center")
    v = np.ones(4)
    v[:3] = center
    clip = ep.projection_matrix @ (ep.eye_matrix @ v)
    ndc = clip[:2] / clip[3]
    y_scale = p00 / p11
    c = np.array([ndc[0], ndc[1] * y_scale])
    radius = p00 * obj.half_size_m / z_fwd
    return c, radius, y_scale


def _circle_intersection_area(c1, r1, c2, r2) -> float:
    d = float(np.linalg.norm(np.asarray(c1) - np.asarray(c2)))
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    a1 = math.acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
    a2 = math.acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
    return (
        r1 * r1 * (a1 - math.sin(2.0 * a1) / 2.0)
        + r2 * r2 * (a2 - math.sin(2.0 * a2) / 2.0)
    )


def occlusion_reveal_fraction(
    front: SceneObject,
    back: SceneObject,
    gaze_a: GazeState,
    gaze_b: GazeState,
    model: SchematicEyeModel,
    geom: DisplayGeometry,
    side: str = "right",
) -> float:
    """Fraction of the back disc's projected area revealed when gaze moves a -> b.

    Computed analytically from the projected disc outlines, not pixel counts.
    Requires a coaxial pair that the front disc fully occludes under gaze_a.
    """
    if front.lateral_deg != back.lateral_deg:
        raise ValueError("occlusion metric requires a coaxial front/back pair")
    if front.depth_m > back.depth_m:
        raise ValueError("front object must be nearer than the back object")

    ep_a = eye_and_projection(gaze_a, model, geom, side)
    cf_a, rf_a, _ = _disc_outline_ndc(front, ep_a)
    cb_a, rb_a, _ = _disc_outline_ndc(back, ep_a)
    if float(np.linalg.norm(cf_a - cb_a)) + rb_a > rf_a + 1e-9:
        raise ValueError("front disc does not fully occlude the back disc under gaze_a")

    ep_b = eye_and_projection(gaze_b, model, geom, side)
    cf_b, rf_b, _ = _disc_outline_ndc(front, ep_b)
    cb_b, rb_b, _ = _disc_outline_ndc(back, ep_b)
    back_area = math.pi * rb_b * rb_b
    covered = _circle_intersection_area(cf_b, rf_b, cb_b, rb_b)
    return float(min(max(1.0 - covered / back_area, 0.0), 1.0))


def make_detection_stimulus(absolute_d: float, relative_d: float, seed: int = 0) -> Scene:
    """Two-disc detection stimulus: solid red back disc occluded by a white-noise front disc.

    Both discs subtend 2 degrees regardless of depth and sit on the viewing
    axis; the scene carries the 16-degree orbiting fixation target as a
    descriptor with seed-randomized phase and direction.
    """
    if relative_d < 0.0:
        raise ValueError("relative distance must be >= 0")
    rng = np.random.default_rng(seed)
    back = SceneObject(
        kind="disc",
        depth_diopters=absolute_d,
        angular_size_deg=2.0,
        texture=Texture.solid(1.0, 0.0, 0.0),
    )
    front = SceneObject(
        kind="disc",
        depth_diopters=absolute_d + relative_d,
        angular_size_deg=2.0,
        texture=Texture.white_noise(int(rng.integers(0, 2**31 - 1))),
    )
    orbit = FixationOrbit(
        radius_deg=16.0,
        rate_deg_s=90.0,
        direction="ccw" if rng.random() < 0.5 else "cw",
        start_phase_deg=float(rng.uniform(0.0, 360.0)),
    )
    return Scene(objects=(back, front), background=Background(), fixation_orbit=orbit)


def count_red_pixels(img: RetinalImage) -> int:
    """Pixels with any back-surface (red) contribution: gray/black content has R == G."""
    px = img.pixels.astype(int)
    return int(np.count_nonzero(px[..., 0] > px[..., 1]))


# ---------------------------------------------------------------------------
# Scene document (version 1)

def scene_to_dict(scene: Scene) -> dict:
    doc = {
        "version": SCENE_SCHEMA_VERSION,
        "background": {
            "kind": scene.background.kind,
            "color": list(scene.background.color),
            "color2": list(scene.background.color2),
            "period_deg": scene.background.period_deg,
        },
        "objects": [
            {
                "kind": o.kind,
                "depth_diopters": o.depth_diopters,
                "angular_size_deg": o.angular_size_deg,
                "lateral_deg": list(o.lateral_deg),
                "texture": {
                    "kind": o.texture.kind,
                    "color": list(o.texture.color),
                    "seed": o.texture.seed,
                    "ref": o.texture.ref,
                },
            }
            for o in scene.objects
        ],
    }
    if scene.fixation_orbit is not None:
        orbit = scene.fixation_orbit
        doc["fixation_orbit"] = {
            "radius_deg": orbit.radius_deg,
            "rate_deg_s": orbit.rate_deg_s,
            "direction": orbit.direction,
            "start_phase_deg": orbit.start_phase_deg,
        }
    return doc


def scene_from_dict(doc: dict) -> Scene:
    if not isinstance(doc, dict):
        raise ValueError("scene document must be a JSON object")
    if doc.get("version") != SCENE_SCHEMA_VERSION:
        raise ValueError(f"unsupported scene version {doc.get('version')!r}")
    bg_doc = doc.get("background", {})
    background = Background(
        kind=bg_doc.get("kind", "solid"),
        color=tuple(bg_doc.get("color", (0.0, 0.0, 0.0))),
        color2=tuple(bg_doc.get("color2", (0.35, 0.35, 0.35))),
        period_deg=bg_doc.get("period_deg", 5.0),
    )
    objects = []
    for o in doc.get("objects", []):
        tex_doc = o.get("texture", {})
        texture = Texture(
            kind=tex_doc.get("kind", "solid"),
            color=tuple(tex_doc.get("color", (1.0, 1.0, 1.0))),
            seed=int(tex_doc.get("seed", 0)),
            ref=tex_doc.get("ref", ""),
        )
        objects.append(
            SceneObject(
                kind=o["kind"],
                depth_diopters=float(o["depth_diopters"]),
                angular_size_deg=float(o["angular_size_deg"]),
                lateral_deg=tuple(o.get("lateral_deg", (0.0, 0.0))),
                texture=texture,
            )
        )
    orbit = None
    if "fixation_orbit" in doc:
        od = doc["fixation_orbit"]
        orbit = FixationOrbit(
            radius_deg=float(od.get("radius_deg", 16.0)),
            rate_deg_s=float(od.get("rate_deg_s", 90.0)),
            direction=od.get("direction", "ccw"),
            start_phase_deg=float(od.get("start_phase_deg", 0.0)),
        )
    return Scene(objects=tuple(objects), background=background, fixation_orbit=orbit)


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)
        fh.write("\n")


def default_scene() -> Scene:
    """Demo scene: near/mid discs and quads over an infinite checker background."""
    return Scene(
        objects=(
            SceneObject("textured_quad", 0.5, 6.0, Texture.white_noise(11), lateral_deg=(6.0, -2.0)),
            SceneObject("disc", 1.0, 4.0, Texture.solid(0.85, 0.3, 0.2), lateral_deg=(-5.0, 2.0)),
            SceneObject("disc", 2.0, 3.0, Texture.solid(0.25, 0.55, 0.9), lateral_deg=(0.0, 0.0)),
            SceneObject("textured_quad", 3.0, 2.5, Texture.white_noise(12), lateral_deg=(3.0, 3.5)),
        ),
        background=Background(kind="infinite_plane", color=(0.12, 0.12, 0.12), color2=(0.22, 0.22, 0.22), period_deg=4.0),
    )


# ---------------------------------------------------------------------------
# Image output

def write_ppm(img: RetinalImage, path) -> None:
    """Binary PPM (P6), the canonical lossless output format."""
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))


def ppm_bytes(img: RetinalImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def png_bytes(img: RetinalImage) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_png(img: RetinalImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(png_bytes(img))
