import numpy as np
import pytest

from lesionbench.labeling import (
    connected_components,
    connected_components_union_find,
    mask_volume_ml,
)

from conftest import make_mask, random_mask
from oracles import flood_fill_components


def test_single_voxel():
    data = np.zeros((4, 4, 4))
    data[2, 1, 3] = 1
    lab = connected_components(make_mask(data))
    assert lab.lesion_count == 1
    assert lab.lesion_voxels.tolist() == [1]


def test_empty_mask():
    lab = connected_components(make_mask(np.zeros((4, 4, 4))))
    assert lab.lesion_count == 0
    assert lab.total_volume_ml == 0.0


def test_corner_touching_voxels_by_connectivity():
    # two voxels sharing only a cube corner on a 2x2x2 grid
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = 1
    data[1, 1, 1] = 1
    mask = make_mask(data)
    assert connected_components(mask, 26).lesion_count == 1
    assert connected_components(mask, 18).lesion_count == 2
    assert connected_components(mask, 6).lesion_count == 2
    # oracle: corner neighbors differ in all three coordinates
    for conn, expected in ((6, 2), (18, 2), (26, 1)):
        assert len(flood_fill_components(data, conn)) == expected


def test_edge_touching_voxels():
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = 1
    data[1, 1, 0] = 1  # share an edge
    mask = make_mask(data)
    assert connected_components(mask, 6).lesion_count == 2
    assert connected_components(mask, 18).lesion_count == 1
    assert connected_components(mask, 26).lesion_count == 1


def test_label_order_is_lexicographic_first_voxel():
    data = np.zeros((6, 6, 6))
    data[4, 4, 4] = 1  # later in scan order
    data[0, 0, 0] = 1
    data[2, 2, 2] = 1
    lab = connected_components(make_mask(data))
    assert lab.label_map[0, 0, 0] == 1
    assert lab.label_map[2, 2, 2] == 2
    assert lab.label_map[4, 4, 4] == 3


def test_voxel_count_conservation(rng):
    for _ in range(20):
        mask = random_mask(rng, density=0.2)
        lab = connected_components(mask)
        assert lab.lesion_voxels.sum() == mask.foreground_voxels
        assert sorted(np.unique(lab.label_map)) == list(range(lab.lesion_count + 1)) or (
            lab.lesion_count == 0 and lab.label_map.max() == 0
        )


def test_translation_invariance(rng):
    base = random_mask(rng, shape=(10, 10, 10), density=0.15)
    lab0 = connected_components(base)
    shifted = np.zeros((14, 14, 14), np.uint8)
    shifted[2:12, 3:13, 1:11] = base.data
    lab1 = connected_components(make_mask(shifted))
    assert lab1.lesion_count == lab0.lesion_count
    assert sorted(lab1.lesion_voxels) == sorted(lab0.lesion_voxels)


def test_connectivity_monotonicity(rng):
    for _ in range(30):
        mask = random_mask(rng, density=rng.uniform(0.05, 0.4))
        n26 = connected_components(mask, 26).lesion_count
        n18 = connected_components(mask, 18).lesion_count
        n6 = connected_components(mask, 6).lesion_count
        assert n26 <= n18 <= n6


def _partition(label_map):
    comps = {}
    for coord in map(tuple, np.argwhere(label_map > 0)):
        comps.setdefault(label_map[coord], set()).add(coord)
    return sorted((frozenset(c) for c in comps.values()), key=min)


@pytest.mark.parametrize("conn", [6, 18, 26])
def test_union_find_flood_fill_cross_check(conn):
    # 200 random 16^3 masks: union-find, scipy path and BFS oracle agree
    rng = np.random.default_rng(42 + conn)
    for i in range(200):
        mask = random_mask(rng, shape=(16, 16, 16), density=rng.uniform(0.02, 0.35))
        fast = connected_components(mask, conn)
        slow = connected_components_union_find(mask, conn)
        assert fast.lesion_count == slow.lesion_count
        assert np.array_equal(fast.label_map, slow.label_map), f"iteration {i}"
        oracle = flood_fill_components(mask.data, conn)
        assert _partition(fast.label_map) == sorted(oracle, key=min)


def test_mask_volume_ml():
    data = np.zeros((10, 10, 10))
    data.ravel()[:625] = 1
    assert mask_volume_ml(make_mask(data, pixdim=(2, 2, 2))) == pytest.approx(5.0)
    data2 = np.zeros((10, 10, 10))
    data2.ravel()[:1000] = 1
    assert mask_volume_ml(make_mask(data2)) == pytest.approx(1.0)
    assert mask_volume_ml(make_mask(np.zeros((4, 4, 4)))) == 0.0


def test_bad_connectivity_rejected():
    with pytest.raises(ValueError):
        connected_components(make_mask(np.zeros((2, 2, 2))), 4)
