"""Gaze-contingent ocular parallax rendering toolkit.

The eye's center of projection (the front nodal point) sits 7-8 mm in front
of its center of rotation, so every change in gaze direction induces small
depth-dependent image shifts. This package computes the per-eye view and
projection transforms that reproduce the effect on a fixed display, analyzes
the tradeoff between parallax magnitude and peripheral acuity, simulates
retinal images with gaze-contingent occlusion, and runs the 2AFC threshold
experiment pipeline against simulated observers.
"""

from .eye_model import (
    DEFAULT_MODEL,
    DEFAULT_NC_M,
    SchematicEyeModel,
    builtin_models,
    get_model,
    nc_distance,
    nc_meters,
)
from .perception import (
    AcuityModel,
    DisplaySpec,
    ParallaxQuery,
    detectability_crossover,
    display_mar_crossover,
    mar,
    parallax_angle,
    parallax_for_relative_distance,
    pursuit_retinal_speed,
    tradeoff_table,
)
from .psychophysics import (
    PsychometricFit,
    SessionPlan,
    SimulatedObserver,
    TrialCondition,
    binomial_test,
    discrimination_linear_fit,
    fit_psychometric,
    plan_detection_session,
    plan_discrimination_session,
    proportion_correct,
    simulate_response,
)
from .retinal import (
    Background,
    RetinalImage,
    Scene,
    SceneObject,
    Texture,
    foveate,
    make_detection_stimulus,
    occlusion_reveal_fraction,
    render,
)
from .transforms import (
    DisplayGeometry,
    EyeProjection,
    Frustum,
    GazeState,
    NodalPair,
    RenderMode,
    eye_and_projection,
    eye_matrix,
    nodal_pair,
    nodal_point,
    per_eye_fixation,
    projection_frustum,
    projection_matrix,
    screen_displacement,
)

__version__ = "0.1.0"
