"""Schematic eye models and the rotation-center-to-nodal-point distance.

The eye's center of projection (front nodal point N) sits several
millimeters in front of its center of rotation C. That offset is the
lever arm that produces gaze-contingent parallax, so everything downstream
only needs two numbers per eye model: where N is and where C is, both
measured from the corneal vertex V.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

# Fry's average center of rotation, mm behind the corneal vertex.
DEFAULT_ROTATION_CENTER_MM = 14.7536

MM_PER_M = 1000.0


@dataclass(frozen=True)
class SchematicEyeModel:
    """Cardinal-point distances of a schematic eye, in millimeters from the corneal vertex.

    vn_mm / vnp_mm are the front / rear nodal point distances, vc_mm the
    center of rotation. ``state`` is either "relaxed" or "accommodated".
    """

    name: str
    vn_mm: float
    vnp_mm: float
    vc_mm: float = DEFAULT_ROTATION_CENTER_MM
    state: str = "relaxed"

    def __post_init__(self):
        if not (0.0 < self.vn_mm <= self.vnp_mm < self.vc_mm):
            raise ValueError(
                f"{self.name}: cardinal points must satisfy 0 < VN <= VN' < VC "
                f"(got VN={self.vn_mm}, VN'={self.vnp_mm}, VC={self.vc_mm})"
            )
        if self.state not in ("relaxed", "accommodated"):
            raise ValueError(f"unknown accommodation state {self.state!r}")

    def with_rotation_center(self, vc_mm: float) -> "SchematicEyeModel":
        """Per-user calibrated rotation center, keeping the nodal points."""
        return replace(self, vc_mm=vc_mm)


def nc_distance(model: SchematicEyeModel) -> float:
    """Distance from the center of rotation C to the front nodal point N, in mm."""
    return model.vc_mm - model.vn_mm


def nc_meters(model: SchematicEyeModel) -> float:
    """nc_distance converted to meters; the single mm->m conversion point."""
    return nc_distance(model) / MM_PER_M


# Front/rear nodal point distances (mm from corneal vertex) for the three
# classic schematic eyes, relaxed and (where published) accommodated.
_GULLSTRAND1_RELAXED = SchematicEyeModel("gullstrand1", 7.078, 7.331, state="relaxed")
_GULLSTRAND1_ACC = SchematicEyeModel("gullstrand1", 6.533, 6.847, state="accommodated")
_GULLSTRAND_EMSLEY_RELAXED = SchematicEyeModel("gullstrand-emsley", 7.062, 7.363, state="relaxed")
_GULLSTRAND_EMSLEY_ACC = SchematicEyeModel("gullstrand-emsley", 6.562, 6.909, state="accommodated")
_EMSLEY_REDUCED = SchematicEyeModel("emsley", 5.556, 5.556, state="relaxed")

_BUILTINS = (
    _GULLSTRAND1_RELAXED,
    _GULLSTRAND1_ACC,
    _GULLSTRAND_EMSLEY_RELAXED,
    _GULLSTRAND_EMSLEY_ACC,
    _EMSLEY_REDUCED,
)


def builtin_models() -> list[SchematicEyeModel]:
    """The five built-in schematic eye models."""
    return list(_BUILTINS)


def get_model(name: str, accommodated: bool = False) -> SchematicEyeModel:
    """Look up a built-in model by name ("gullstrand1", "gullstrand-emsley", "emsley").

    The Emsley reduced eye has no published accommodated variant; asking for
    one is an error rather than a silent fallback.
    """
    want_state = "accommodated" if accommodated else "relaxed"
    key = name.strip().lower()
    for m in _BUILTINS:
        if m.name == key and m.state == want_state:
            return m
    known = sorted({m.name for m in _BUILTINS})
    if key in known:
        raise ValueError(f"model {name!r} has no {want_state} variant")
    raise ValueError(f"unknown eye model {name!r}; known models: {', '.join(known)}")


# The model used throughout unless the caller picks another one.
DEFAULT_MODEL = _GULLSTRAND_EMSLEY_RELAXED
DEFAULT_NC_M = nc_meters(DEFAULT_MODEL)
