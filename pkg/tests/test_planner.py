import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seepp.geometry import View
from seepp.metrics import travel_distance
from seepp.occlusion import OcclusionConfig
from seepp.planner import MODES, Planner, PlannerConfig, view_distance
from seepp.point_store import StoreConfig
from seepp.sensor_sim import D435, SensorModel
from seepp.view_proposal import ProposalConfig

from oracles import frustum_distance

EMPTY = np.empty((0, 3))
SEED = View((0, 0, 1.0), (0, 0, -1))


def surface(x_sparse=0.06, half=0.06):
    """Dense (core) strip for x <= 0 next to a sparse strip, so frontiers sit on the seam."""
    ys = np.arange(-half, half + 1e-9, 0.004)
    dense = [(x, y, 0.0) for x in np.arange(-0.1, 1e-9, 0.004) for y in ys]
    sy = np.arange(-half, half + 1e-9, 0.015)
    sparse = [(x, y, 0.0) for x in np.arange(0.006, x_sparse, 0.015) for y in sy]
    return np.array(dense + sparse)


def slab(z=0.26, half=0.3, s=0.008):
    g = np.arange(-half, half + 1e-9, s)
    return np.array([(x, y, z + k * s) for x in g for y in g for k in range(3)])


def config(mode, max_views=500, adjust_step=30.0, tau=100):
    return PlannerConfig(mode, StoreConfig(1.0, 0.017, 1e-6, 10), OcclusionConfig(0.6, 0.017),
                         ProposalConfig(1.0, 0.6), tau=tau, max_views=max_views, adjust_step=adjust_step)


# -- view distance -------------------------------------------------------------

def test_view_distance_examples():
    assert view_distance(D435, 146000) == pytest.approx(1.98, rel=0.005)
    hi = SensorModel(60.0, 40.0, 2400, 1750)
    assert view_distance(hi, 213) == pytest.approx(41.3, rel=0.005)


@settings(max_examples=100)
@given(st.floats(10, 170), st.floats(10, 170), st.integers(1, 4000), st.integers(1, 4000), st.floats(1.0, 1e7))
def test_view_distance_matches_frustum_density(tx, ty, wx, wy, rho):
    s = SensorModel(tx, ty, wx, wy)
    assert view_distance(s, rho) == pytest.approx(frustum_distance(s, rho), rel=1e-9)
    assert view_distance(s, 8 * rho) == pytest.approx(view_distance(s, rho) / 2, rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        config("nope")
    with pytest.raises(ValueError):
        config("see", max_views=0)
    with pytest.raises(ValueError):
        config("see", tau=0)
    assert config("see").max_attempts == 12


# -- reactive adjustment ---------------------------------------------------------

def adjust_planner(failed_direction):
    p = Planner(config("see"), View(failed_direction, -np.asarray(failed_direction)))
    p.store.insert_measurements(surface(), 0)
    p.store.reclassify_arrays(np.arange(len(p.store)))
    target = int(np.argmin(np.linalg.norm(p.store.positions, axis=1)))
    return p, target


def test_adjustment_from_normal_direction():
    p, t = adjust_planner((0, 0, 1.0))
    v = p.reactive_adjustment(t, View((0, 0, 1.0), (0, 0, -1)))
    rel = v.position - p.store.positions[t]
    assert np.linalg.norm(rel) == pytest.approx(p.d, rel=1e-12)
    assert math.degrees(math.acos(rel[2] / np.linalg.norm(rel))) == pytest.approx(30.0, abs=1e-9)
    np.testing.assert_allclose(v.orientation, -rel / np.linalg.norm(rel), atol=1e-12)


def test_adjustment_rotates_in_normal_sight_plane():
    a = math.radians(20)
    p, t = adjust_planner((math.sin(a), 0, math.cos(a)))
    f = p.store.positions[t]
    v = p.reactive_adjustment(t, View(f + (math.sin(a), 0, math.cos(a)), (-math.sin(a), 0, -math.cos(a))))
    b = math.radians(50)  # axis z x s points along +y; rotating by 30 degrees opens the angle to 50
    np.testing.assert_allclose(v.position, f + p.d * np.array([math.sin(b), 0, math.cos(b)]), atol=1e-9)


def first_target(mode):
    p = Planner(config(mode), SEED)
    nxt = p.step(surface())
    return p, nxt, p.state.pending_target


def test_abandoned_after_full_revolution():
    p, _, t = first_target("see")
    views = []
    for _ in range(11):
        views.append(p.step(EMPTY))
        assert p.state.pending_target == t and t not in p.exhausted
    assert p.state.adjustment_count[t] == 11
    f = p.store.positions[t]
    for a, b in zip(views, views[1:]):
        u, w = a.position - f, b.position - f
        assert math.degrees(math.acos(np.clip(u @ w / p.d ** 2, -1, 1))) == pytest.approx(30.0, abs=1e-6)
    p.step(EMPTY)
    assert t in p.exhausted and t not in p.candidates() and p.state.pending_target != t


def test_counter_resets_when_target_observed():
    p, _, t = first_target("see")
    p.step(EMPTY)
    assert p.state.adjustment_count[t] == 1
    f = p.store.positions[t]
    g = np.arange(-0.03, 0.0301, 0.003)
    p.step(np.array([(f[0] + x, f[1] + y, 0.0) for x in g for y in g]))
    assert t not in p.store.frontier_set()
    assert t not in p.state.adjustment_count


@pytest.mark.parametrize("mode", MODES)
def test_first_view_along_a_frontier_normal(mode):
    p, nxt, t = first_target(mode)
    assert nxt is not None and t in p.store.frontier_set()
    rel = nxt.position - p.store.positions[t]
    assert np.linalg.norm(rel) == pytest.approx(p.d, rel=1e-9)
    np.testing.assert_allclose(nxt.orientation, -rel / p.d, atol=1e-9)
    if mode == "see":  # flat scene, nothing in the way: straight up the normal
        np.testing.assert_allclose(nxt.orientation, (0, 0, -1), atol=1e-6)


@pytest.mark.parametrize("mode", MODES)
def test_saturating_measurements_complete(mode):
    p = Planner(config(mode), SEED)
    g = np.arange(-0.1, 0.1001, 0.004)
    assert p.step(np.array([(x, y, 0.0) for x in g for y in g])) is None
    assert p.complete and len(p.store.frontier_set()) == 0
    assert p.step(EMPTY) is None and len(p.view_history) == 1


def test_max_views_stops():
    p = Planner(config("see", max_views=3), SEED)
    assert p.step(surface()) is not None
    assert p.step(EMPTY) is not None
    assert p.step(EMPTY) is None and len(p.view_history) == 3


def test_proactive_mode_avoids_occluded_choice():
    scene = np.vstack([surface(), slab()])
    see, pp = Planner(config("see"), SEED), Planner(config("see_plus_plus"), SEED)
    v_see, v_pp = see.step(scene), pp.step(scene)
    t_see, t_pp = see.state.pending_target, pp.state.pending_target
    assert not see.detector.is_visible(t_see, v_see, see.offsets[t_see])
    assert pp.detector.is_visible(t_pp, v_pp, pp.offsets[t_pp])
    assert v_pp != v_see


@settings(max_examples=15)
@given(st.floats(0.02, 0.07), st.floats(0.02, 0.06), st.sampled_from([30.0, 45.0, 90.0]))
def test_progress_without_new_information(x_sparse, half, step):
    # no capture ever resolves anything: every target is adjusted until abandoned
    p = Planner(config("see", adjust_step=step), SEED)
    p.step(surface(x_sparse, half))
    bound = len(p.candidates()) * p.config.max_attempts
    n = 0
    while p.step(EMPTY) is not None:
        n += 1
        assert n <= bound
    assert not p.candidates()


def test_progress_without_new_information_proactive():
    p = Planner(config("see_plus_plus", adjust_step=120.0), SEED)
    p.step(surface(0.03, 0.03))
    bound = len(p.candidates()) * p.config.max_attempts
    n = 0
    while p.step(EMPTY) is not None:
        n += 1
        assert n <= bound
    assert not p.candidates()


@pytest.mark.parametrize("mode", MODES)
def test_history_integrity(mode):
    p = Planner(config(mode), SEED)
    p.step(surface())
    for _ in range(5):
        if p.step(EMPTY) is None:
            break
    assert len(p.view_history) == len(p.log) + (0 if p.complete else 1)
    pos = [v.position for v in p.view_history]
    ref = math.fsum(math.dist(a, b) for a, b in zip(pos, pos[1:]))
    assert travel_distance(p.view_history) == pytest.approx(ref, rel=1e-12)


def sphere_config():
    from seepp.config import from_dict

    return from_dict({
        "scene": "builtin:cube",
        "sensor": {"theta_x": 60, "theta_y": 45, "omega_x": 120, "omega_y": 90, "sigma": 0.0},
        "planner": {"rho": 33900, "r": 0.03, "psi": 0.5, "tau": 1000},
        "metrics": {"r_d": 0.01},
    })


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="runs end when frontiers vanish, leaving order-dependent uncovered patches")
@settings(max_examples=10, derandomize=True)
@given(st.integers(0, 10_000))
def test_modes_reach_same_coverage_without_occluders(seed):
    from scipy.spatial import ConvexHull

    from seepp.geometry import fibonacci_sphere
    from seepp.harness import run_trial
    from seepp.metrics import sample_ground_truth
    from seepp.sensor_sim import SceneMesh

    pts = fibonacci_sphere(2000) * 0.3
    mesh = SceneMesh(pts, ConvexHull(pts).simplices)  # convex: nothing occludes
    cfg = sphere_config()  # tau exceeds any proposal count here
    gt = sample_ground_truth(mesh, 20000, 0)
    a = run_trial(cfg, mesh, gt, "see", seed).row["coverage"]
    b = run_trial(cfg, mesh, gt, "see_plus_plus", seed).row["coverage"]
    assert abs(a - b) <= 0.01
