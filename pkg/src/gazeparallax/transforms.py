"""Per-eye view and projection transforms for gaze-contingent parallax rendering.

Coordinate conventions, fixed once here and relied on everywhere:

* Right-handed head space: +x to the viewer's right, +y up, the viewer looks
  down -z. Fixation points in front of the viewer have negative z.
* The head-space origin is the midpoint between the two eyes. The left eye's
  center of rotation sits at (-ipd/2, 0, 0), the right eye's at (+ipd/2, 0, 0),
  so the fixation relative to the left eye is F + (ipd/2, 0, 0) and relative
  to the right eye F - (ipd/2, 0, 0).
* Nodal points are expressed relative to the owning eye's center of rotation.
* The frustum formulas treat the forward nodal offset as a positive scalar
  (the viewer looks down -z, so that scalar is |n_z| of the nodal vector),
  while the lateral components keep their head-space signs. The boundary
  values returned in ``Frustum`` live on the plane the formulas evaluate
  them at, z_near + n_fwd from the nodal point, and ``Frustum.z_near``
  records that plane so the projection matrix stays self-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eye_model import SchematicEyeModel, nc_meters

Transform4 = np.ndarray  # 4x4 float64, row-major homogeneous transform

SIDES = ("left", "right")

MODE_CONVENTIONAL = "conventional"
MODE_OCULAR = "ocular"
MODE_REVERSED = "reversed"
_MODES = (MODE_CONVENTIONAL, MODE_OCULAR, MODE_REVERSED)


@dataclass(frozen=True)
class RenderMode:
    """Rendering variant: conventional stereo, ocular parallax, or its reversed control.

    ``gain`` scales the nodal offset; gain 1 is the physiologically faithful
    setting, larger gains amplify the effect. The reversed mode negates the
    x and y nodal components, inverting the direction of the induced parallax.
    """

    kind: str = MODE_OCULAR
    gain: float = 1.0

    def __post_init__(self):
        if self.kind not in _MODES:
            raise ValueError(f"unknown render mode {self.kind!r}; expected one of {_MODES}")
        if self.gain <= 0.0:
            raise ValueError("gain must be positive")

    @classmethod
    def conventional(cls) -> "RenderMode":
        return cls(MODE_CONVENTIONAL)

    @classmethod
    def ocular_parallax(cls, gain: float = 1.0) -> "RenderMode":
        return cls(MODE_OCULAR, gain)

    @classmethod
    def reversed_ocular(cls, gain: float = 1.0) -> "RenderMode":
        return cls(MODE_REVERSED, gain)


@dataclass(frozen=True)
class GazeState:
    """Tracked fixation point (head space, meters), interpupillary distance and mode.

    ipd == 0 encodes monocular viewing with the eye on the head axis, which is
    how single-eye stimuli are simulated.
    """

    fixation: np.ndarray
    ipd: float = 0.064
    mode: RenderMode = field(default_factory=RenderMode.ocular_parallax)

    def __post_init__(self):
        fx = np.asarray(self.fixation, dtype=float).reshape(3)
        object.__setattr__(self, "fixation", fx)
        if self.ipd < 0.0:
            raise ValueError("ipd must be >= 0")
        if not np.all(np.isfinite(fx)):
            raise ValueError("fixation must be finite")
        if np.linalg.norm(fx) == 0.0:
            raise ValueError("fixation must have nonzero magnitude")
        if fx[2] >= 0.0:
            raise ValueError("fixation must be in front of the viewer (negative z)")


@dataclass(frozen=True)
class NodalPair:
    """Per-eye nodal points, each relative to that eye's center of rotation."""

    n_left: np.ndarray
    n_right: np.ndarray


@dataclass(frozen=True)
class DisplayGeometry:
    """Field-of-view half-angles (degrees, positive magnitudes) and clip planes.

    ``image_distance`` is the optical distance of the virtual image in meters;
    math.inf selects the analytic infinite-image limit instead of a
    large-number stand-in.
    """

    fov_left: float
    fov_right: float
    fov_top: float
    fov_bottom: float
    image_distance: float = math.inf
    z_near: float = 0.1
    z_far: float = 1000.0

    def __post_init__(self):
        for name in ("fov_left", "fov_right", "fov_top", "fov_bottom"):
            a = getattr(self, name)
            if not (0.0 < a < 90.0):
                raise ValueError(f"{name} must be in (0, 90) degrees, got {a}")
        if not (0.0 < self.z_near < self.z_far):
            raise ValueError("require 0 < z_near < z_far")
        if not math.isinf(self.image_distance) and self.image_distance < self.z_near:
            raise ValueError("image_distance must be >= z_near (or infinite)")

    @classmethod
    def symmetric(cls, fov_half_deg: float, **kwargs) -> "DisplayGeometry":
        return cls(fov_half_deg, fov_half_deg, fov_half_deg, fov_half_deg, **kwargs)


@dataclass(frozen=True)
class Frustum:
    """Signed boundary values on the near plane, meters."""

    l: float
    r: float
    t: float
    b: float
    z_near: float
    z_far: float

    def __post_init__(self):
        if not (self.l < self.r and self.b < self.t):
            raise ValueError("degenerate frustum: require l < r and b < t")


def translation(v) -> Transform4:
    """4x4 translation by the 3-vector v."""
    m = np.eye(4)
    m[:3, 3] = np.asarray(v, dtype=float).reshape(3)
    return m


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def per_eye_fixation(state: GazeState, side: str) -> np.ndarray:
    """Fixation point expressed relative to one eye's center of rotation.

    Left eye: F + (ipd/2, 0, 0); right eye: F - (ipd/2, 0, 0).
    """
    _check_side(side)
    offset = np.array([state.ipd / 2.0, 0.0, 0.0])
    f_eye = state.fixation + offset if side == "left" else state.fixation - offset
    if np.linalg.norm(f_eye) == 0.0:
        raise ValueError("per-eye fixation has zero magnitude")
    return f_eye


def nodal_point(f_eye: np.ndarray, nc: float, mode: RenderMode) -> np.ndarray:
    """Nodal point for one eye given its fixation vector and the NC distance (meters).

    Ocular mode places it gain*nc along the gaze direction; the reversed mode
    negates the x and y components; conventional rendering keeps it at the
    center of rotation (zero vector).
    """
    if mode.kind == MODE_CONVENTIONAL:
        return np.zeros(3)
    f_eye = np.asarray(f_eye, dtype=float).reshape(3)
    norm = np.linalg.norm(f_eye)
    if norm == 0.0:
        raise ValueError("cannot derive a gaze direction from a zero-length fixation")
    if nc <= 0.0:
        raise ValueError("nc must be positive")
    n = (mode.gain * nc / norm) * f_eye
    if mode.kind == MODE_REVERSED:
        n = n * np.array([-1.0, -1.0, 1.0])
    return n


def nodal_pair(state: GazeState, nc: float) -> NodalPair:
    """Nodal points for both eyes under the state's render mode."""
    return NodalPair(
        n_left=nodal_point(per_eye_fixation(state, "left"), nc, state.mode),
        n_right=nodal_point(per_eye_fixation(state, "right"), nc, state.mode),
    )


def eye_matrix(n: np.ndarray, ipd: float, side: str) -> Transform4:
    """View-space to eye-space transform: translate by -n after the stereo half-ipd shift.

    The product is T(-n) @ T(+-ipd/2 along x), with + for the left eye and
    - for the right, matching the per-eye fixation sign choice.
    """
    _check_side(side)
    n = np.asarray(n, dtype=float).reshape(3)
    half = ipd / 2.0 if side == "left" else -ipd / 2.0
    return translation(-n) @ translation([half, 0.0, 0.0])


def projection_frustum(geom: DisplayGeometry, n: np.ndarray) -> Frustum:
    """Asymmetric view-frustum bounds for a projection center offset to n.

    The forward nodal offset enters as the positive scalar |n_z| while the
    lateral components keep their signs. For a finite image distance d:

        {l, r} = (z_near + n_fwd) / (d + n_fwd) * (d * tan(alpha_{l,r}) + n_x)
        {t, b} = (z_near + n_fwd) / (d + n_fwd) * (d * tan(alpha_{t,b}) + n_y)

    with the left/bottom half-angles negative. For d = inf the limit is
    {l, r} = (z_near + n_fwd) * tan(alpha_{l,r}) and likewise for {t, b}:
    the lateral terms vanish, which is what keeps objects at infinity
    registered on the display while the gaze moves. The returned frustum's
    z_near is the plane the bounds live on, z_near + n_fwd.
    """
    n = np.asarray(n, dtype=float).reshape(3)
    n_x, n_y = float(n[0]), float(n[1])
    n_fwd = abs(float(n[2]))
    d = geom.image_distance

    tan_l = math.tan(math.radians(-geom.fov_left))
    tan_r = math.tan(math.radians(geom.fov_right))
    tan_t = math.tan(math.radians(geom.fov_top))
    tan_b = math.tan(math.radians(-geom.fov_bottom))

    near_plane = geom.z_near + n_fwd
    if math.isinf(d):
        l, r = near_plane * tan_l, near_plane * tan_r
        t, b = near_plane * tan_t, near_plane * tan_b
    else:
        if d + n_fwd <= 0.0:
            raise ValueError("image distance plus forward nodal offset must be positive")
        scale = near_plane / (d + n_fwd)
        l, r = scale * (d * tan_l + n_x), scale * (d * tan_r + n_x)
        t, b = scale * (d * tan_t + n_y), scale * (d * tan_b + n_y)
    return Frustum(l=l, r=r, t=t, b=b, z_near=near_plane, z_far=geom.z_far)


def projection_matrix(f: Frustum) -> Transform4:
    """Right-handed perspective projection with clip-space z in [-1, 1].

    Row-major layout; entry [3, 2] is -1, so clip w is the positive forward
    distance of the eye-space point.
    """
    if f.l == f.r or f.t == f.b or f.z_near == f.z_far:
        raise ValueError("degenerate frustum")
    zn, zf = f.z_near, f.z_far
    m = np.zeros((4, 4))
    m[0, 0] = 2.0 * zn / (f.r - f.l)
    m[0, 2] = (f.r + f.l) / (f.r - f.l)
    m[1, 1] = 2.0 * zn / (f.t - f.b)
    m[1, 2] = (f.t + f.b) / (f.t - f.b)
    m[2, 2] = -(zf + zn) / (zf - zn)
    m[2, 3] = -2.0 * zf * zn / (zf - zn)
    m[3, 2] = -1.0
    return m


@dataclass(frozen=True)
class EyeProjection:
    """Everything the pipeline needs for one eye in one frame."""

    eye_matrix: Transform4
    projection_matrix: Transform4
    nodal_point: np.ndarray
    frustum: Frustum


def eye_and_projection(
    state: GazeState,
    model: SchematicEyeModel,
    geom: DisplayGeometry,
    side: str,
) -> EyeProjection:
    """Compose fixation -> nodal point -> eye matrix and frustum -> projection matrix."""
    nc = nc_meters(model)
    f_eye = per_eye_fixation(state, side)
    n = nodal_point(f_eye, nc, state.mode)
    e = eye_matrix(n, state.ipd, side)
    frustum = projection_frustum(geom, n)
    p = projection_matrix(frustum)
    return EyeProjection(eye_matrix=e, projection_matrix=p, nodal_point=n, frustum=frustum)


def project_point(p: np.ndarray, ep: EyeProjection) -> np.ndarray:
    """NDC (x, y) of a head-space point under one eye's transforms.

    Raises if the point is on or behind the near plane.
    """
    v = np.ones(4)
    v[:3] = np.asarray(p, dtype=float).reshape(3)
    v_eye = ep.eye_matrix @ v
    if -v_eye[2] <= ep.frustum.z_near:
        raise ValueError("point is behind the near plane")
    clip = ep.projection_matrix @ v_eye
    return clip[:2] / clip[3]


def screen_displacement(
    p: np.ndarray,
    gaze_a: GazeState,
    gaze_b: GazeState,
    model: SchematicEyeModel,
    geom: DisplayGeometry,
    side: str,
) -> np.ndarray:
    """NDC shift of a head-space point when the gaze changes from a to b.

    Conventional rendering is gaze-invariant, so this is (0, 0) there; under
    ocular parallax it is the on-screen micro parallax of the point.
    """
    ndc_a = project_point(p, eye_and_projection(gaze_a, model, geom, side))
    ndc_b = project_point(p, eye_and_projection(gaze_b, model, geom, side))
    return ndc_b - ndc_a
