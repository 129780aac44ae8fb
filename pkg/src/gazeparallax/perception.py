"""Acuity falloff vs. parallax magnitude: the perceptual tradeoff analysis.

Parallax between two points on the pre-rotation gaze axis is computed with
exact geometry: rotate the eye by the eccentricity angle about its center of
rotation C, place the nodal point NC along the new gaze direction, and
measure the angular separation of the two points as seen from that nodal
point. Distances are object distances from C; the relative distance between
the points is expressed in diopters (inverse meters), where the effect is
close to linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eye_model import DEFAULT_NC_M

# Far reference (meters) used when a relative distance in diopters needs a
# concrete pair of object distances. Matches the depth range of the
# detection stimuli; the crossover eccentricity is mildly sensitive to it.
DEFAULT_FAR_REFERENCE_M = 1.0

ARCMIN_PER_DEG = 60.0


@dataclass(frozen=True)
class AcuityModel:
    """Linear minimum-angle-of-resolution model: MAR = omega0 + m * eccentricity."""

    m: float = 0.022  # degrees MAR per degree of eccentricity
    omega0: float = 1.0 / 60.0  # foveal MAR, degrees (20/20 vision)

    def __post_init__(self):
        if self.m < 0.0:
            raise ValueError("acuity slope m must be >= 0")
        if self.omega0 <= 0.0:
            raise ValueError("foveal MAR omega0 must be positive")


@dataclass(frozen=True)
class DisplaySpec:
    """Angular pixel pitch of a display, arcminutes per pixel."""

    pixel_pitch_arcmin: float = 4.58

    def __post_init__(self):
        if self.pixel_pitch_arcmin <= 0.0:
            raise ValueError("pixel pitch must be positive")

    @property
    def pixel_pitch_deg(self) -> float:
        return self.pixel_pitch_arcmin / ARCMIN_PER_DEG


@dataclass(frozen=True)
class ParallaxQuery:
    """Two points on the gaze axis at d_near <= d_far meters from C, viewed at some eccentricity."""

    eccentricity_deg: float
    d_near: float
    d_far: float = math.inf
    nc: float = DEFAULT_NC_M

    def __post_init__(self):
        if not (0.0 <= self.eccentricity_deg < 90.0):
            raise ValueError("eccentricity must be in [0, 90) degrees")
        if not (0.0 < self.d_near <= self.d_far):
            raise ValueError("require 0 < d_near <= d_far")
        if self.nc <= 0.0:
            raise ValueError("nc must be positive")

    @property
    def delta_diopters(self) -> float:
        far_term = 0.0 if math.isinf(self.d_far) else 1.0 / self.d_far
        return 1.0 / self.d_near - far_term


def mar(model: AcuityModel, eccentricity_deg: float) -> float:
    """Minimum angle of resolution at an eccentricity, degrees."""
    if eccentricity_deg < 0.0:
        raise ValueError("eccentricity must be >= 0")
    return model.omega0 + model.m * eccentricity_deg


def parallax_angle(q: ParallaxQuery) -> float:
    """Angular separation (degrees) of the two query points seen from the rotated nodal point.

    With the eye rotated by e, the nodal point sits at NC*(sin e, cos e) in
    the plane through C and both points, so each point subtends
    atan(NC sin e / (d - NC cos e)) from the post-rotation gaze axis; the
    parallax is the difference of the two. The far term is 0 for d_far = inf.
    """
    e = math.radians(q.eccentricity_deg)
    offset = q.nc * math.sin(e)
    along = q.nc * math.cos(e)
    if q.d_near <= along:
        raise ValueError("d_near must exceed the nodal point's forward offset NC*cos(e)")

    near_term = math.atan2(offset, q.d_near - along)
    far_term = 0.0 if math.isinf(q.d_far) else math.atan2(offset, q.d_far - along)
    return math.degrees(near_term - far_term)


def parallax_for_relative_distance(
    eccentricity_deg: float,
    delta_d: float,
    nc: float = DEFAULT_NC_M,
    d_far: float = DEFAULT_FAR_REFERENCE_M,
) -> float:
    """Parallax (degrees) for a relative distance in diopters against the far reference."""
    if delta_d < 0.0:
        raise ValueError("delta_d must be >= 0")
    if delta_d == 0.0:
        return 0.0
    far_diopters = 0.0 if math.isinf(d_far) else 1.0 / d_far
    d_near = 1.0 / (far_diopters + delta_d)
    return parallax_angle(ParallaxQuery(eccentricity_deg, d_near, d_far, nc))


def detectability_crossover(
    model: AcuityModel,
    delta_d: float,
    nc: float = DEFAULT_NC_M,
    d_far: float = DEFAULT_FAR_REFERENCE_M,
) -> float | None:
    """Largest eccentricity (degrees) where the parallax still reaches the MAR.

    Scans (0, 90) at 0.1 degrees and refines the last crossing by bisection to
    0.001 degrees; the scan-then-bracket order is deliberate because the two
    curves can graze each other. Returns None when parallax stays below MAR
    everywhere.
    """
    if delta_d <= 0.0:
        raise ValueError("delta_d must be positive")

    def above(e: float) -> bool:
        return parallax_for_relative_distance(e, delta_d, nc, d_far) >= mar(model, e)

    step = 0.1
    grid = np.arange(step, 90.0, step)
    above_grid = [above(float(e)) for e in grid]
    if not any(above_grid):
        return None
    last = max(i for i, hit in enumerate(above_grid) if hit)
    lo = float(grid[last])
    hi = min(lo + step, 90.0 - 1e-9)
    if above(hi):
        return hi
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def display_mar_crossover(model: AcuityModel, disp: DisplaySpec) -> float:
    """Eccentricity (degrees) where the display pixel pitch equals the MAR.

    Below this eccentricity the display out-resolves the eye's static acuity.
    """
    pitch_deg = disp.pixel_pitch_deg
    if pitch_deg < model.omega0:
        raise ValueError("display pitch is below the foveal MAR (display out-resolves the fovea)")
    if model.m == 0.0:
        if pitch_deg == model.omega0:
            return 0.0
        raise ValueError("flat acuity model never reaches the display pitch")
    return (pitch_deg - model.omega0) / model.m


def pursuit_retinal_speed(orbit_radius_deg: float, angular_rate_deg_s: float) -> float:
    """Gaze-direction angular speed when tracking a target circling at a fixed visual-angle radius."""
    if not (0.0 <= orbit_radius_deg < 90.0):
        raise ValueError("orbit radius must be in [0, 90) degrees")
    return angular_rate_deg_s * math.sin(math.radians(orbit_radius_deg))


def tradeoff_table(
    model: AcuityModel,
    disp: DisplaySpec,
    delta_d_list: list[float],
    max_eccentricity_deg: float = 40.0,
    step_deg: float = 0.5,
    nc: float = DEFAULT_NC_M,
    d_far: float = DEFAULT_FAR_REFERENCE_M,
) -> tuple[list[str], np.ndarray]:
    """Parallax-vs-acuity curves as (header, rows).

    Columns, in fixed order: eccentricity_deg, one parallax column per
    relative distance, mar_deg, display_mar_deg.
    """
    if step_deg <= 0.0:
        raise ValueError("step must be positive")
    if not delta_d_list:
        raise ValueError("need at least one relative distance")
    eccs = np.arange(0.0, max_eccentricity_deg + 0.5 * step_deg, step_deg)
    header = (
        ["eccentricity_deg"]
        + [f"parallax_deg_dd{dd:g}" for dd in delta_d_list]
        + ["mar_deg", "display_mar_deg"]
    )
    rows = np.empty((len(eccs), len(header)))
    rows[:, 0] = eccs
    for j, dd in enumerate(delta_d_list, start=1):
        rows[:, j] = [parallax_for_relative_distance(float(e), dd, nc, d_far) for e in eccs]
    rows[:, -2] = [mar(model, float(e)) for e in eccs]
    rows[:, -1] = disp.pixel_pitch_deg
    return header, rows


def linearity_deviation(
    eccentricity_deg: float,
    delta_d_max: float = 4.0,
    samples: int = 50,
    nc: float = DEFAULT_NC_M,
    d_far: float = DEFAULT_FAR_REFERENCE_M,
) -> float:
    """Full-scale-normalized deviation of parallax from linearity in diopters.

    Fits a least-squares line to parallax over delta_d in [0, delta_d_max] and
    returns max |residual| / max |parallax|, the instrumentation-style
    nonlinearity measure (pointwise relative error is singular at delta_d=0).
    """
    dds = np.linspace(0.0, delta_d_max, samples)
    ps = np.array([parallax_for_relative_distance(eccentricity_deg, float(dd), nc, d_far) for dd in dds])
    design = np.vstack([dds, np.ones_like(dds)]).T
    coef, *_ = np.linalg.lstsq(design, ps, rcond=None)
    resid = ps - design @ coef
    scale = np.max(np.abs(ps))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(resid)) / scale)
