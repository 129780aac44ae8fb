import pytest

from gazeparallax.eye_model import (
    SchematicEyeModel,
    builtin_models,
    get_model,
    nc_distance,
    nc_meters,
)


def by_name(name, state="relaxed"):
    return next(m for m in builtin_models() if m.name == name and m.state == state)


def test_builtin_models_table_values():
    models = builtin_models()
    assert len(models) == 5
    expected_vn = {
        ("gullstrand1", "relaxed"): 7.078,
        ("gullstrand1", "accommodated"): 6.533,
        ("gullstrand-emsley", "relaxed"): 7.062,
        ("gullstrand-emsley", "accommodated"): 6.562,
        ("emsley", "relaxed"): 5.556,
    }
    expected_vnp = {
        ("gullstrand1", "relaxed"): 7.331,
        ("gullstrand1", "accommodated"): 6.847,
        ("gullstrand-emsley", "relaxed"): 7.363,
        ("gullstrand-emsley", "accommodated"): 6.909,
        ("emsley", "relaxed"): 5.556,
    }
    seen = {(m.name, m.state) for m in models}
    assert seen == set(expected_vn)
    for m in models:
        assert m.vn_mm == expected_vn[(m.name, m.state)]
        assert m.vnp_mm == expected_vnp[(m.name, m.state)]
        assert m.vc_mm == 14.7536


def test_emsley_reduced_has_coincident_nodal_points():
    m = by_name("emsley")
    assert m.vn_mm == m.vnp_mm == 5.556


def test_nc_distance_examples():
    assert nc_distance(by_name("gullstrand-emsley")) == pytest.approx(7.6916, abs=1e-9)
    assert nc_distance(by_name("emsley")) == pytest.approx(9.1976, abs=1e-9)
    assert nc_distance(by_name("gullstrand1", "accommodated")) == pytest.approx(8.2206, abs=1e-9)


def test_nc_band_for_all_builtins():
    for m in builtin_models():
        assert 7.0 <= nc_distance(m) <= 9.3


def test_relaxed_gullstrand_variants_in_7_to_8_band():
    for name in ("gullstrand1", "gullstrand-emsley"):
        assert 7.0 <= nc_distance(by_name(name)) <= 8.0


def test_accommodated_nodal_points_move_toward_cornea():
    for name in ("gullstrand1", "gullstrand-emsley"):
        assert by_name(name, "accommodated").vn_mm < by_name(name).vn_mm


def test_cardinal_point_ordering_invariant():
    for m in builtin_models():
        assert 0 < m.vn_mm <= m.vnp_mm < m.vc_mm
        assert nc_distance(m) > 0


def test_nc_meters_conversion():
    assert nc_meters(by_name("gullstrand-emsley")) == pytest.approx(0.0076916, abs=1e-12)


def test_get_model_by_name_and_state():
    assert get_model("gullstrand-emsley").vn_mm == 7.062
    assert get_model("Gullstrand1", accommodated=True).vn_mm == 6.533
    assert get_model("emsley").state == "relaxed"


def test_get_model_errors():
    with pytest.raises(ValueError, match="no accommodated variant"):
        get_model("emsley", accommodated=True)
    with pytest.raises(ValueError, match="unknown eye model"):
        get_model("legrand")


def test_invalid_cardinal_points_rejected():
    with pytest.raises(ValueError):
        SchematicEyeModel("bad", vn_mm=15.0, vnp_mm=15.5, vc_mm=14.7536)
    with pytest.raises(ValueError):
        SchematicEyeModel("bad", vn_mm=7.5, vnp_mm=7.0, vc_mm=14.7536)


def test_custom_rotation_center():
    m = get_model("gullstrand-emsley").with_rotation_center(15.0)
    assert nc_distance(m) == pytest.approx(15.0 - 7.062, abs=1e-12)
