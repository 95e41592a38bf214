import json
from fractions import Fraction

import numpy as np
import pytest

from qmpsched.core import (DefragBarrier, JobRequest, LatencyModel, ProcessorConfig, ReservedJob, ScheduleState,
                           estimate_schedule_point, measure_latency, pairwise_overlaps, take_waiting_jobs, validate)
from qmpsched.geometry import Cuboid, PlacedCuboid, Polycube, Rect
from qmpsched.greedy import corner_greedy_schedule

from conftest import box, occupancy_conflicts, random_requests, state_with


def test_processor_step():
    p = ProcessorConfig()
    assert (p.W, p.H, p.code_distance) == (20, 20, 31)
    assert p.step_us == 31
    assert p.us_to_steps(2652) == 86
    assert p.us_to_steps(31) == 1 and p.us_to_steps(32) == 2 and p.us_to_steps(0) == 0
    assert ProcessorConfig(code_cycle_us=Fraction(1, 2), code_distance=4).step_us == 2
    with pytest.raises(ValueError):
        ProcessorConfig(0, 5)


def test_schedule_point_examples():
    st = ScheduleState()
    assert estimate_schedule_point(st, 100, LatencyModel.measured()) == 101
    lat = LatencyModel.measured()
    lat.record(31)
    lat.record(31)
    assert estimate_schedule_point(st, 0, lat) == 1
    lat = LatencyModel.measured()
    lat.record(2652)
    assert estimate_schedule_point(st, 0, lat) == 86


def test_schedule_point_never_before_current():
    st = ScheduleState(sp=500)
    assert estimate_schedule_point(st, 10, LatencyModel.measured()) == 500


def test_latency_window_bounded():
    lat = LatencyModel.measured(window=16)
    for k in range(40):
        lat.record(k)
    assert len(lat.history) == 16 and lat.mean_us() == sum(range(24, 40)) / 16


def test_synthetic_latency():
    lat = LatencyModel.parse("synthetic:10")
    assert measure_latency(lat, lambda: None, 5, 123) == 50
    lat = LatencyModel.parse("synthetic:10:2")
    assert lat.measure(lambda: "r", 5, 3) == ("r", 56)
    assert LatencyModel.parse("measured").mode.value == "measured"
    for bad in ("synthetic", "synthetic:1:2:3", "fast"):
        with pytest.raises(ValueError):
            LatencyModel.parse(bad)


def test_cold_start_prediction():
    st = ScheduleState()
    assert estimate_schedule_point(st, 0, LatencyModel.parse("synthetic:0"), 5) == 0
    assert estimate_schedule_point(st, 0, LatencyModel.parse("synthetic:100"), 5) == 17


def test_measured_latency_is_wall_clock():
    us = measure_latency(LatencyModel.measured(), lambda: sum(range(10000)))
    assert us > 0


def _jobs(*arrivals):
    return [JobRequest(i, Cuboid(1, 1, 1), a) for i, a in enumerate(arrivals)]


def test_take_waiting_jobs():
    q = _jobs(*[0] * 7)
    batch = take_waiting_jobs(q, 5, 0)
    assert [j.id for j in batch] == [0, 1, 2, 3, 4] and len(q) == 2
    assert take_waiting_jobs([], 5, 0) == []
    q = _jobs(0, 1, 2, 50, 60)
    assert [j.id for j in take_waiting_jobs(q, 5, 10)] == [0, 1, 2]
    assert [j.id for j in q] == [3, 4]
    with pytest.raises(ValueError):
        take_waiting_jobs(q, 0, 0)


def test_job_request_polycube_bounding():
    r = JobRequest(1, Polycube.from_points([(0, 0, 0), (2, 1, 4)]))
    assert r.cuboid == Cuboid(3, 2, 5)
    with pytest.raises(ValueError):
        JobRequest(1, Cuboid(1, 1, 1), -1)


def test_validate_examples():
    assert validate(state_with([box(0, 0, 0, 0, 5, 5, 5), box(1, 5, 0, 0, 5, 5, 5)])) == []
    bad = validate(state_with([box(0, 16, 0, 0, 5, 5, 5)]))
    assert [v.kind for v in bad] == ["OutOfBounds"]
    bad = validate(state_with([box(0, 0, 0, 0, 5, 5, 5), box(1, 4, 4, 4, 5, 5, 5)]))
    assert [(v.kind, v.jobs) for v in bad] == [("Overlap", (0, 1))]


def test_validate_segments_and_barriers():
    st = state_with([])
    st.reserved[0] = ReservedJob(0, [box(0, 0, 0, 0, 2, 2, 5), box(0, 3, 0, 6, 2, 2, 5)], 10)
    assert [v.kind for v in validate(st)] == ["Discontiguous"]
    st.reserved[0] = ReservedJob(0, [box(0, 0, 0, 0, 2, 2, 5), box(0, 3, 0, 5, 2, 2, 5)], 11)
    assert [v.kind for v in validate(st)] == ["Discontiguous"]
    st.reserved[0] = ReservedJob(0, [box(0, 0, 0, 0, 2, 2, 5), box(0, 3, 0, 5, 2, 2, 5)], 10)
    assert validate(st) == []
    st.barriers.append(DefragBarrier(3, (Rect(1, 1, 4, 4),)))
    assert [v.kind for v in validate(st)] == ["Barrier"]


def test_barrier_blocks_definition():
    b = DefragBarrier(10, (Rect(0, 0, 5, 5),))
    assert b.blocks(box(0, 2, 2, 5, 2, 2, 10))
    assert not b.blocks(box(0, 2, 2, 10, 2, 2, 10))  # strictly above
    assert not b.blocks(box(0, 2, 2, 0, 2, 2, 10))  # ends exactly at t
    assert not b.blocks(box(0, 5, 0, 5, 2, 2, 10))  # touches the region edge


def test_validate_against_occupancy_grid_oracle():
    rng = np.random.default_rng(7)
    W = H = 6
    for _ in range(60):
        st = ScheduleState(processor=ProcessorConfig(W, H))
        reqs = random_requests(rng, 8, side=(1, 3), length=(1, 4))
        placed, st.candidates = corner_greedy_schedule(st, reqs, 0)
        # perturb one job
        k = int(rng.integers(len(placed)))
        p = placed[k]
        placed[k] = p.moved(x=max(0, p.x + int(rng.integers(-2, 3))), y=max(0, p.y + int(rng.integers(-2, 3))),
                            z=max(0, p.z + int(rng.integers(-2, 3))))
        st = state_with(placed, W, H)
        pairs, outside = occupancy_conflicts(placed, W, H)
        found = validate(st)
        assert {v.jobs for v in found if v.kind == "Overlap"} == {tuple(sorted((placed[i].id, placed[j].id)))
                                                                 for i, j in pairs}
        assert {v.jobs[0] for v in found if v.kind == "OutOfBounds"} == {placed[i].id for i in outside}


def test_pairwise_overlaps_chunking_agrees():
    rng = np.random.default_rng(3)
    lo = rng.integers(0, 10, size=(300, 3))
    arr = np.hstack([lo, lo + rng.integers(1, 4, size=(300, 3))])
    assert pairwise_overlaps(arr, chunk=7) == pairwise_overlaps(arr, chunk=1000)


def test_state_ledger_json_and_advance(tmp_path):
    st = state_with([box(1, 0, 0, 0, 2, 2, 5), box(0, 2, 0, 0, 2, 2, 8)])
    doc = st.to_json()
    assert doc == {"jobs": [{"id": 0, "segments": [{"x": 2, "y": 0, "z": 0, "w": 2, "h": 2, "l": 8}]},
                            {"id": 1, "segments": [{"x": 0, "y": 0, "z": 0, "w": 2, "h": 2, "l": 5}]}],
                   "makespan": 8}
    st.dump(tmp_path / "l.json", note=1)
    assert json.loads((tmp_path / "l.json").read_text())["note"] == 1
    st.candidates = {(0, 0, 3): None, (0, 0, 9): None}
    st.barriers = [DefragBarrier(4, ()), DefragBarrier(12, ())]
    st.advance(5)
    assert list(st.candidates) == [(0, 0, 9)] and [b.t for b in st.barriers] == [12]
    with pytest.raises(ValueError):
        st.advance(4)
    with pytest.raises(ValueError):
        st.add([box(1, 5, 5, 0, 1, 1, 1)])


def test_copy_is_independent():
    st = state_with([box(0, 0, 0, 0, 2, 2, 5)])
    cp = st.copy()
    cp.add([box(1, 5, 5, 0, 1, 1, 1)])
    cp.reserved[0].segments.append(box(0, 0, 0, 5, 2, 2, 1))
    assert list(st.reserved) == [0] and len(st.reserved[0].segments) == 1
    assert len(st.segment_array()) == 1 and len(cp.segment_array()) == 3
