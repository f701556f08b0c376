import dataclasses
import math

import numpy as np
import pytest

from hmcf import analytic, hgeom, ops, shapes
from hmcf import flow
from hmcf.hmesh import TriMesh

FAST = flow.FlowConfig(cfl=0.5)


@pytest.fixture(scope="module")
def sphere_run():
    return flow.run(shapes.gen_sphere(1.0, resolution=162), FAST)


@pytest.fixture(scope="module")
def dumbbell_run():
    return flow.run(shapes.gen_dumbbell(8.0, 0.1, 2000), FAST, axis=shapes.dumbbell_axis(8.0))


def test_zero_steps_returns_initial_state(sphere642):
    state, records = flow.run(sphere642, flow.FlowConfig(max_steps=0))
    assert records == []
    assert state.step_index == 0 and state.t == 0.0
    assert state.mesh is sphere642


def test_small_sphere_goes_extinct_near_analytic_time(sphere_run):
    state, records = sphere_run
    assert state.status == "extinct"
    assert state.t == pytest.approx(analytic.extinction_time(1.0), rel=0.05)
    assert records[0].step == 0 and records[-1].step == state.step_index


def test_area_and_volume_strictly_decrease(sphere_run):
    _, records = sphere_run
    assert all(b.A < a.A for a, b in zip(records, records[1:]))
    assert all(b.V < a.V for a, b in zip(records, records[1:]))
    assert all(b.t > a.t for a, b in zip(records, records[1:]))


def test_extinction_time_within_diameter_bound(sphere_run):
    state, records = sphere_run
    assert state.t <= 1.05 * math.log(math.cosh(records[0].diam))


def test_record_every_and_terminal_record():
    mesh = shapes.gen_sphere(1.0, resolution=42)
    state, records = flow.run(mesh, flow.FlowConfig(cfl=0.5, record_every=7, max_steps=30))
    assert state.status in ("max_steps", "extinct")
    steps = [r.step for r in records]
    assert steps[:3] == [0, 7, 14]
    assert steps[-1] == state.step_index


def test_max_steps_status():
    state, records = flow.run(shapes.gen_sphere(1.0, resolution=162), flow.FlowConfig(max_steps=3))
    assert state.status == "max_steps" and state.step_index == 3
    with pytest.raises(ValueError):
        flow.step(state, FAST)


def test_dumbbell_pinches_with_nonincreasing_neck(dumbbell_run):
    state, records = dumbbell_run
    assert state.status == "singular"
    neck = [r.neckRadius for r in records]
    assert all(b <= a + 1e-12 for a, b in zip(neck, neck[1:]))
    assert neck[-1] < 0.2 * 0.1
    assert records[-1].A > 0.5 * records[0].A


def test_nan_coordinates_raise_with_dump(sphere642):
    state = flow.initial_state(sphere642)
    H = state.cf.H.copy()
    H[5] = np.nan
    state = dataclasses.replace(state, cf=dataclasses.replace(state.cf, H=H))
    with pytest.raises(flow.FlowError) as exc:
        flow.step(state, FAST, dt=1e-3)
    assert exc.value.dump["step"] == 1
    assert 5 in exc.value.dump["bad_vertices"]


@pytest.mark.parametrize(
    "kwargs",
    [{"cfl": 0.0}, {"cfl": 1.5}, {"dt_min": 0.0}, {"record_every": 0}, {"max_steps": -1},
     {"remesh": "split"}, {"velocity": "fast"}, {"tangential_smoothing": 1.0}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        flow.FlowConfig(**kwargs)


def test_config_round_trip():
    cfg = flow.FlowConfig(cfl=0.3, remesh="collapse_short_edges")
    assert flow.FlowConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        flow.FlowConfig.from_dict({"cfl": 0.3, "bogus": 1})


def test_stable_dt_formula(sphere642):
    cf = ops.curvature_field(sphere642)
    e = ops.edge_lengths(sphere642).min()
    h = np.abs(cf.H).max()
    expected = min(0.25 * e * e / max(1.0, h * e), 0.25 / h ** 2)
    assert flow.stable_dt(sphere642, cf, flow.FlowConfig()) == pytest.approx(expected, rel=1e-15)


def test_spec_literal_velocity_also_shrinks_sphere():
    cfg = flow.FlowConfig(cfl=0.5, velocity="vector", max_steps=20)
    state, records = flow.run(shapes.gen_sphere(1.0, resolution=162), cfg)
    assert records[-1].A < records[0].A and state.status == "max_steps"


def test_remeshing_run_stays_valid():
    cfg = flow.FlowConfig(cfl=0.5, remesh="collapse_short_edges", remesh_ratio=0.3, max_steps=40)
    state, _ = flow.run(shapes.gen_dumbbell(6.0, 0.15, 1500), cfg)
    from hmcf import hmesh
    assert hmesh.validate(state.mesh) == []
    assert state.mesh.euler_characteristic() == 2


def test_neck_radius_of_tube():
    s, th = np.meshgrid(np.linspace(-1.5, 1.5, 31), np.linspace(0, 2 * np.pi, 24, endpoint=False))
    pts = shapes.fermi_point(s.ravel(), 0.1, th.ravel())
    tube = TriMesh(pts, np.zeros((0, 3), dtype=int))
    axis = (hgeom.axis_point(-1.0), hgeom.axis_point(1.0))
    assert flow.neck_radius(tube, axis) == pytest.approx(0.1, rel=0.05)


def test_neck_radius_of_sphere_on_axis_midpoint(sphere2562):
    axis = (hgeom.axis_point(-0.3), hgeom.axis_point(0.3))
    assert flow.neck_radius(sphere2562, axis) == pytest.approx(1.0, rel=0.02)


def test_neck_radius_needs_vertices_in_middle_third(sphere642):
    axis = (hgeom.axis_point(5.0), hgeom.axis_point(8.0))
    with pytest.raises(ValueError):
        flow.neck_radius(sphere642, axis)


def test_pair_flow_keeps_distance_monitor():
    a = shapes.gen_sphere(1.0, center=hgeom.axis_point(-2.0), resolution=162)
    b = shapes.gen_sphere(1.0, center=hgeom.axis_point(2.0), resolution=162)
    sa, sb, records = flow.run_pair(a, b, FAST)
    assert "extinct" in (sa.status, sb.status)
    assert sa.t == sb.t
    tol = flow.pair_tolerance(a, b)
    assert min(r.monitorF1 for r in records) >= -math.sinh(tol / 2)
    assert min(r.monitorFa1 for r in records) >= -tol


def test_nested_spheres_stay_disjoint():
    inner = shapes.gen_sphere(1.0, resolution=162)
    outer = shapes.gen_sphere(2.0, resolution=642)
    si, so, records = flow.run_pair(inner, outer, FAST)
    assert si.status == "extinct" and so.status == "running"
    assert min(r.d for r in records) > 0
