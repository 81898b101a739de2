import math
import random

import pytest

from smgbench.core import Vec2
from smgbench.projection import FEAS_TOL, HalfPlane, ProjectionResult, project

from oracle_projection import disc_grid_oracle


def random_instance(rng, max_planes=5, cap=1.0):
    n = rng.randint(1, max_planes)
    cons = []
    for _ in range(n):
        ang = rng.uniform(-math.pi, math.pi)
        offset = rng.uniform(-0.2, 0.9)
        cons.append(HalfPlane(Vec2(math.cos(ang), math.sin(ang)), offset))
    u_nom = Vec2(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
    return u_nom, cons, cap


class TestTrivial:
    def test_no_constraints_identity(self):
        r = project(Vec2(1, 0), [], 2.0)
        assert r.feasible and r.max_violation == 0.0
        assert r.u_star.dist(Vec2(1, 0)) < 1e-12

    def test_no_constraints_clamped(self):
        r = project(Vec2(4, 0), [], 2.0)
        assert r.u_star.dist(Vec2(2, 0)) < 1e-12

    def test_axis_aligned_projection(self):
        r = project(Vec2(1, 0), [HalfPlane(Vec2(1, 0), 0.5)], 2.0)
        assert r.feasible
        assert r.u_star.dist(Vec2(0.5, 0)) < 1e-9

    def test_non_unit_normal_rejected(self):
        with pytest.raises(ValueError):
            HalfPlane(Vec2(1, 1), 0.0)

    def test_too_many_constraints_rejected(self):
        cons = [HalfPlane(Vec2(1, 0), float(k)) for k in range(65)]
        with pytest.raises(ValueError):
            project(Vec2(0, 0), cons, 1.0)


class TestOracleEquivalence:
    def test_100_seeded_instances(self):
        rng = random.Random(20240817)
        for trial in range(100):
            u_nom, cons, cap = random_instance(rng)
            r = project(u_nom, cons, cap)
            _, oracle_feasible, oracle_obj = disc_grid_oracle(u_nom, cons, cap)
            assert r.feasible == oracle_feasible, f"trial {trial}: feasibility mismatch"
            obj = r.u_star.dist(u_nom) if r.feasible else r.max_violation
            assert abs(obj - oracle_obj) < 1e-3, (
                f"trial {trial}: objective {obj} vs oracle {oracle_obj}"
            )


class TestInvariants:
    def test_feasible_satisfies_all_constraints(self):
        rng = random.Random(5)
        for _ in range(200):
            u_nom, cons, cap = random_instance(rng)
            r = project(u_nom, cons, cap)
            assert r.u_star.norm() <= cap + 1e-9
            if r.feasible:
                assert r.max_violation == 0.0
                for c in cons:
                    assert c.violation(r.u_star) <= FEAS_TOL

    def test_rotation_equivariance(self):
        rng = random.Random(6)
        for _ in range(100):
            u_nom, cons, cap = random_instance(rng)
            theta = rng.uniform(-math.pi, math.pi)
            rot_cons = [HalfPlane(c.normal.rotated(theta), c.offset) for c in cons]
            r1 = project(u_nom, cons, cap)
            r2 = project(u_nom.rotated(theta), rot_cons, cap)
            assert r1.feasible == r2.feasible
            assert r2.u_star.dist(r1.u_star.rotated(theta)) < 1e-7

    def test_order_independence(self):
        rng = random.Random(9)
        for _ in range(100):
            u_nom, cons, cap = random_instance(rng)
            r1 = project(u_nom, cons, cap)
            shuffled = cons[:]
            rng.shuffle(shuffled)
            r2 = project(u_nom, shuffled, cap)
            assert r1.feasible == r2.feasible
            assert r1.u_star.dist(r2.u_star) < 1e-7
            assert abs(r1.max_violation - r2.max_violation) < 1e-7

    def test_infeasible_reports_minimax(self):
        # Two opposing half-planes with negative offsets cannot both hold.
        cons = [HalfPlane(Vec2(1, 0), -0.5), HalfPlane(Vec2(-1, 0), -0.5)]
        r = project(Vec2(0.3, 0.2), cons, 1.0)
        assert not r.feasible
        # Best achievable: u_x = 0, each violated by exactly 0.5.
        assert r.max_violation == pytest.approx(0.5, abs=1e-6)
        assert abs(r.u_star.x) < 1e-6

    def test_result_type(self):
        assert isinstance(project(Vec2(0, 0), [], 1.0), ProjectionResult)
