import math
import random

import pytest

from smgbench.core import (
    AgentState,
    Trajectory,
    Vec2,
    WorldGeometry,
    path_length,
    point_segment_distance,
    resample,
    segment_segment_distance,
)


def make_traj(points, dt=1.0, velocities=None):
    samples = []
    for k, (x, y) in enumerate(points):
        v = Vec2(*velocities[k]) if velocities else Vec2(0.0, 0.0)
        samples.append(AgentState(Vec2(x, y), v, k * dt))
    return Trajectory(dt=dt, samples=tuple(samples))


class TestVec2:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Vec2(float("nan"), 0.0)
        with pytest.raises(ValueError):
            Vec2(0.0, float("inf"))

    def test_rotation_preserves_norm(self):
        rng = random.Random(0)
        for _ in range(50):
            v = Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5))
            ang = rng.uniform(-math.pi, math.pi)
            assert abs(v.rotated(ang).norm() - v.norm()) < 1e-12

    def test_perp_right_is_clockwise(self):
        assert Vec2(1.0, 0.0).perp_right() == Vec2(0.0, -1.0)
        assert Vec2(0.0, 1.0).perp_right() == Vec2(1.0, 0.0)


class TestPointSegmentDistance:
    def test_perpendicular_foot_inside(self):
        assert point_segment_distance(Vec2(0, 1), (Vec2(-1, 0), Vec2(1, 0))) == pytest.approx(1.0)

    def test_closest_point_is_endpoint(self):
        assert point_segment_distance(Vec2(2, 0), (Vec2(-1, 0), Vec2(1, 0))) == pytest.approx(1.0)

    def test_point_on_segment(self):
        assert point_segment_distance(Vec2(0, 0), (Vec2(0, -1), Vec2(0, 1))) == 0.0

    def test_degenerate_segment_is_point(self):
        assert point_segment_distance(Vec2(3, 4), (Vec2(0, 0), Vec2(0, 0))) == pytest.approx(5.0)

    def test_bounded_by_endpoint_distances(self):
        rng = random.Random(7)
        for _ in range(200):
            p = Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10))
            a = Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10))
            b = Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10))
            d = point_segment_distance(p, (a, b))
            assert d <= min(p.dist(a), p.dist(b)) + 1e-12


class TestPathLength:
    def test_two_unit_segments(self):
        assert path_length(make_traj([(0, 0), (1, 0), (1, 1)])) == pytest.approx(2.0)

    def test_single_sample(self):
        assert path_length(make_traj([(0, 0)])) == 0.0

    def test_345_triangle(self):
        assert path_length(make_traj([(0, 0), (3, 4)])) == pytest.approx(5.0)

    def test_rigid_invariance(self):
        rng = random.Random(3)
        pts = [(rng.uniform(-5, 5), rng.uniform(-5, 5)) for _ in range(10)]
        base = path_length(make_traj(pts))
        for _ in range(20):
            ang = rng.uniform(-math.pi, math.pi)
            off = Vec2(rng.uniform(-3, 3), rng.uniform(-3, 3))
            moved = [(Vec2(x, y).rotated(ang) + off).as_tuple() for x, y in pts]
            assert path_length(make_traj(moved)) == pytest.approx(base, abs=1e-9)


class TestResample:
    def test_identity_at_original_dt(self):
        traj = make_traj([(0, 0), (1, 0), (2, 0)], dt=0.5)
        out = resample(traj, 0.5)
        assert out.dt == pytest.approx(0.5)
        for a, b in zip(out.samples, traj.samples):
            assert a.position.dist(b.position) < 1e-12

    def test_midpoint(self):
        traj = make_traj([(0, 0), (2, 0)], dt=2.0)
        out = resample(traj, 1.0)
        assert len(out.samples) == 3
        assert out.samples[1].position.dist(Vec2(1, 0)) < 1e-12
        assert out.samples[1].time == pytest.approx(1.0)

    def test_constant_velocity_stays_on_line(self):
        pts = [(0.3 * k, -0.1 * k) for k in range(8)]
        traj = make_traj(pts, dt=0.25)
        out = resample(traj, 0.07)
        d = Vec2(0.3, -0.1).unit()
        for s in out.samples:
            # Perpendicular deviation from the original line through origin.
            assert abs(s.position.cross(d)) < 1e-9

    def test_round_trip(self):
        rng = random.Random(11)
        pts = [(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(6)]
        traj = make_traj(pts, dt=0.5)
        back = resample(resample(traj, 0.1), 0.5)
        assert len(back.samples) == len(traj.samples)
        for a, b in zip(back.samples, traj.samples):
            assert a.position.dist(b.position) < 1e-9

    def test_single_sample_unchanged(self):
        traj = make_traj([(1, 2)])
        assert resample(traj, 0.1) is traj


class TestTrajectoryInvariants:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Trajectory(dt=0.1, samples=())

    def test_nonuniform_rejected(self):
        s = [AgentState(Vec2(0, 0), Vec2(0, 0), 0.0), AgentState(Vec2(1, 0), Vec2(0, 0), 0.3)]
        with pytest.raises(ValueError):
            Trajectory(dt=0.1, samples=tuple(s))


class TestWorldGeometry:
    def test_segments_outside_bounds_rejected(self):
        with pytest.raises(ValueError):
            WorldGeometry(
                obstacles=((Vec2(0, 0), Vec2(20, 0)),),
                bounds=(0.0, 0.0, 10.0, 10.0),
            )

    def test_clearance_empty(self):
        g = WorldGeometry(obstacles=(), bounds=(0, 0, 1, 1))
        assert g.clearance(Vec2(0.5, 0.5)) == math.inf


def test_segment_segment_distance():
    assert segment_segment_distance((Vec2(0, 0), Vec2(1, 0)), (Vec2(0, 1), Vec2(1, 1))) == pytest.approx(1.0)
    assert segment_segment_distance((Vec2(0, -1), Vec2(0, 1)), (Vec2(-1, 0), Vec2(1, 0))) == 0.0
    assert segment_segment_distance((Vec2(0, 0), Vec2(1, 0)), (Vec2(3, 0), Vec2(4, 0))) == pytest.approx(2.0)
