import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seepp.point_store import CORE, FRONTIER, OUTLIER, PointStore, RejectedInputError, StoreConfig, core_threshold

from conftest import brute_classes

EPS_146K = math.sqrt(1 / 146000)


def store(rho=146000.0, r=0.017, **kw):
    return PointStore(StoreConfig(rho, r, **kw))


def test_config_defaults():
    cfg = StoreConfig(146000, 0.017)
    assert cfg.epsilon == pytest.approx(0.002617, abs=1e-6)
    assert cfg.k_core == 4
    assert core_threshold(146000, 0.017) == math.ceil(146000 * 4 / 3 * math.pi * 0.017**3)


@pytest.mark.parametrize("rho,r", [(0, 0.1), (1, 0), (-1, 1)])
def test_config_rejects_nonpositive(rho, r):
    with pytest.raises(ValueError):
        StoreConfig(rho, r)


def test_insert_into_empty_store():
    s = store()
    assert s.insert_measurements([(0, 0, 0)], 0).tolist() == [0]


def test_epsilon_filter_rejects_close_point():
    s = store()
    s.insert_measurements([(0, 0, 0)], 0)
    assert len(s.insert_measurements([(0, 0, 0.001)], 1)) == 0
    assert len(s) == 1
    assert s.insert_measurements([(0, 0, 1)], 1).tolist() == [1]


def test_batch_order_vetoes_later_points():
    s = store()
    acc = s.insert_measurements([(0, 0, 0), (0, 0, 0.001), (0, 0, 0.01)], 3)
    assert acc.tolist() == [0, 1]
    np.testing.assert_array_equal(s.positions[1], [0, 0, 0.01])
    assert s.view_ids.tolist() == [3, 3]


def test_non_finite_rejected():
    s = store()
    with pytest.raises(RejectedInputError):
        s.insert_measurements([(0, 0, np.nan)], 0)
    assert len(s) == 0


def test_radius_neighbors_examples():
    s = store(rho=1.0, r=0.5, epsilon=1e-6)
    assert len(s.radius_neighbors((0, 0, 0), 1.0)) == 0
    s.insert_measurements([(0, 0, 0), (0, 0, 0.5), (0, 0, 2)], 0)
    assert s.radius_neighbors((0, 0, 0), 1.0).tolist() == [0, 1]
    assert 2 in s.radius_neighbors((0, 0, 2), 1e-9)
    # closed ball: a point exactly on the boundary is included
    assert s.radius_neighbors((0, 0, 1.5), 0.5).tolist() == [2]
    with pytest.raises(ValueError):
        s.radius_neighbors((0, 0, 0), 0.0)


def test_radius_neighbors_matches_linear_scan(rng):
    s = store(rho=1e4, r=0.05)
    pts = rng.uniform(-1, 1, (10_000, 3))
    s.insert_measurements(pts, 0)
    pos = s.positions
    for c in rng.uniform(-1.2, 1.2, (40, 3)):
        for rad in (0.01, 0.05, 0.3, 2.0):
            expect = np.flatnonzero(np.linalg.norm(pos - c, axis=1) <= rad)
            np.testing.assert_array_equal(s.radius_neighbors(c, rad), expect)


def test_min_pairwise_distance_exceeds_epsilon(rng):
    s = store(rho=1e4, r=0.05)
    for v in range(5):
        s.insert_measurements(rng.normal(scale=0.05, size=(2000, 3)), v)
    from scipy.spatial import cKDTree

    d, _ = cKDTree(s.positions).query(s.positions, k=2)
    assert d[:, 1].min() > s.config.epsilon


def test_isolated_point_is_outlier():
    s = store()
    idx = s.insert_measurements([(0, 0, 0)], 0)
    s.reclassify(idx)
    assert s.classes.tolist() == [OUTLIER]
    assert len(s.frontier_set()) == 0


def test_all_core_store_has_no_frontiers():
    s = store(rho=1.0, r=1.0, epsilon=1e-3, k_core=2)
    idx = s.insert_measurements([(0, 0, 0), (0.1, 0, 0), (0, 0.1, 0)], 0)
    s.reclassify(idx)
    assert set(s.classes.tolist()) == {CORE}
    assert len(s.frontier_set()) == 0


def test_frontier_on_density_boundary(rng):
    # dense half-plane x<0 abutting a sparse strip 0<x<0.1
    dense = np.column_stack([rng.uniform(-0.2, 0, 8000), rng.uniform(0, 0.2, 8000), np.zeros(8000)])
    sparse = np.column_stack([rng.uniform(0, 0.1, 150), rng.uniform(0, 0.2, 150), np.zeros(150)])
    s = store(rho=146000.0, r=0.017, k_core=30, epsilon=1e-6)
    idx = s.insert_measurements(np.concatenate([dense, sparse]), 0)
    s.reclassify(idx)
    expect = brute_classes(s.positions, s.config.r, s.config.k_core)
    np.testing.assert_array_equal(s.classes, expect)
    f = s.positions[s.frontier_set()]
    assert len(f) > 0
    r = s.config.r
    # away from the outer edges of the patch, frontiers sit on the dense/sparse seam
    inner = f[(f[:, 1] > 2 * r) & (f[:, 1] < 0.2 - 2 * r) & (f[:, 0] > -0.2 + 2 * r)]
    assert len(inner) > 0
    assert np.all(inner[:, 0] > -r) and np.all(inner[:, 0] < 2 * r)


def test_reclassify_reports_changes():
    s = store(rho=1.0, r=1.0, epsilon=1e-3, k_core=1)
    idx = s.insert_measurements([(0, 0, 0)], 0)
    assert s.reclassify(idx) == []
    idx = s.insert_measurements([(0.5, 0, 0)], 1)
    changes = s.reclassify(idx)
    assert sorted(changes) == [(0, OUTLIER, CORE), (1, OUTLIER, CORE)]


@settings(max_examples=60)
@given(
    batches=st.lists(
        st.lists(st.tuples(*[st.floats(-0.1, 0.1)] * 3), min_size=1, max_size=60), min_size=1, max_size=5
    ),
    k_core=st.integers(1, 6),
)
def test_incremental_equals_batch(batches, k_core):
    s = store(rho=1e5, r=0.03, k_core=k_core)
    for v, b in enumerate(batches):
        idx = s.insert_measurements(b, v)
        s.reclassify(idx)
        np.testing.assert_array_equal(s.classes, brute_classes(s.positions, s.config.r, k_core))
    counts = (np.linalg.norm(s.positions[:, None] - s.positions[None], axis=2) <= s.config.r).sum(1) - 1
    np.testing.assert_array_equal(s.neighbor_counts, counts)
    # frontier sandwich
    cls = s.classes
    for f in s.frontier_set():
        nb = s.radius_neighbors(s.positions[f], s.config.r)
        nb = nb[nb != f]
        assert (cls[nb] == CORE).any() and (cls[nb] != CORE).any()


def test_classification_deterministic(rng):
    pts = rng.normal(scale=0.03, size=(3000, 3))
    a, b = store(), store()
    for s in (a, b):
        s.reclassify(s.insert_measurements(pts, 0))
    np.testing.assert_array_equal(a.classes, b.classes)


def test_dump_load_roundtrip(tmp_path, rng):
    s = store()
    s.reclassify(s.insert_measurements(rng.normal(scale=0.02, size=(500, 3)), 7))
    path = tmp_path / "store.bin"
    s.dump(path)
    raw = path.read_bytes()
    assert len(raw) == len(s) * (3 * 8 + 1 + 4)
    t = PointStore.load(path, s.config)
    np.testing.assert_array_equal(t.positions, s.positions)
    np.testing.assert_array_equal(t.classes, s.classes)
    np.testing.assert_array_equal(t.view_ids, s.view_ids)
    rec = np.frombuffer(raw[:29], dtype=np.dtype([("p", "<f8", 3), ("c", "u1"), ("v", "<u4")]))
    assert rec["v"][0] == 7


def test_frontier_enum_values():
    assert {int(CORE), int(OUTLIER), int(FRONTIER)} == {0, 1, 2}
