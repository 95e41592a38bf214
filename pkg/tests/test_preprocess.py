import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from qmpsched.geometry import Cuboid, Polycube
from qmpsched.preprocess import band_lengths, bounding_cuboid, cover_volume, k_split
from qmpsched.workload import gen_polycube


def P(*pts):
    return Polycube.from_points(pts)


def test_bounding_examples():
    assert bounding_cuboid(P((0, 0, 0))) == Cuboid(1, 1, 1)
    assert bounding_cuboid(P((0, 0, 0), (1, 0, 0), (1, 1, 0))) == Cuboid(2, 2, 1)


def test_bounding_matches_min_max_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        pts = rng.integers(0, 9, size=(int(rng.integers(1, 20)), 3))
        c = bounding_cuboid(Polycube.from_points(pts.tolist()))
        assert (c.w, c.h, c.l) == tuple(int(v) for v in pts.max(axis=0) - pts.min(axis=0) + 1)


def test_k1_is_bounding_box():
    p = P((1, 2, 3), (3, 2, 5))
    (band,) = k_split(p, 1)
    assert band.cuboid == bounding_cuboid(p) and band.z_offset == 0


def test_staircase_k2():
    bands = k_split(P((0, 0, 0), (1, 0, 1)), 2)
    assert [(b.cuboid, b.z_offset) for b in bands] == [(Cuboid(1, 1, 1), 0), (Cuboid(1, 1, 1), 1)]
    assert (bands[1].x_offset, bands[1].y_offset) == (1, 0)


def test_over_split_rejected():
    with pytest.raises(ValueError, match="over-split"):
        k_split(P((0, 0, 0), (0, 0, 1)), 3)
    with pytest.raises(ValueError):
        k_split(P((0, 0, 0)), 0)


def test_band_lengths_rule():
    assert band_lengths(10, 3) == [4, 3, 3]
    assert band_lengths(9, 3) == [3, 3, 3]


def test_gap_band_keeps_previous_footprint():
    bands = k_split(P((0, 0, 0), (1, 1, 0), (0, 0, 2)), 3)
    assert bands[1].cuboid == Cuboid(2, 2, 1)


polycubes = st.frozensets(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 7)),
                          min_size=1, max_size=25).map(Polycube.from_points)


@given(polycubes, st.integers(1, 8))
def test_cover_contains_every_voxel_and_preserves_length(p, k):
    depth = bounding_cuboid(p).l
    k = min(k, depth)
    bands = k_split(p, k)
    lengths = [b.cuboid.l for b in bands]
    assert sum(lengths) == depth and max(lengths) - min(lengths) <= 1
    assert lengths == sorted(lengths, reverse=True)
    lo = [min(v[a] for v in p.voxels) for a in range(3)]
    for v in p.voxels:
        x, y, z = v.x - lo[0], v.y - lo[1], v.z - lo[2]
        assert any(b.x_offset <= x < b.x_offset + b.cuboid.w and b.y_offset <= y < b.y_offset + b.cuboid.h
                   and b.z_offset <= z < b.z_offset + b.cuboid.l for b in bands)


@given(st.integers(1, 60), st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(1, 4))
def test_cover_volume_non_increasing_under_refinement(volume, seed, k, f):
    # with depth divisible by k*f every fine band lies inside one coarse band
    p = gen_polycube(volume, np.random.default_rng(seed))
    depth = bounding_cuboid(p).l
    assume(depth % (k * f) == 0)
    assert cover_volume(k_split(p, k * f)) <= cover_volume(k_split(p, k)) <= bounding_cuboid(p).volume
