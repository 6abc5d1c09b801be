import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snakedex import _kernels
from snakedex.dexterity import _kernel_design_args
from snakedex.kinematics import (
    DesignParams,
    SegmentSpec,
    forward_kinematics,
    joint_limits,
    rolling_joint_transform,
    rot_x,
    rot_y,
    rot_z,
    sample_config,
    sample_configs,
    skeleton_length,
)

SINGLE = DesignParams((SegmentSpec(1.24, 1.62, 3),))
DOUBLE = DesignParams((SegmentSpec(1.34, 6.0, 1), SegmentSpec(1.18, 0.41, 3)))


def random_design(rng, s):
    return DesignParams(tuple(
        SegmentSpec(rng.uniform(0.1, 1.5), rng.uniform(0.2, 8), int(rng.integers(1, 11))) for _ in range(s)
    ))


class TestJointLimits:
    def test_table_design_capped(self):
        lim = joint_limits(SINGLE, 40.0)
        assert lim.names == ("base_pan", "base_tilt", "insertion", "seg1_pan", "seg1_tilt")
        # 2*1.24*2 = 4.96 and 2*1.24*1 = 2.48; pan capped at pi
        assert lim.upper[3] == pytest.approx(math.pi)
        assert lim.upper[4] == pytest.approx(2.48)
        assert np.allclose(lim.lower, -lim.upper * np.array([1, 1, 0, 1, 1]))

    def test_base_limits(self):
        lim = joint_limits(SINGLE, 40.0)
        assert lim.upper[:3] == pytest.approx([math.pi / 3, math.pi / 3, 40.0])

    def test_one_disk_is_pan_only(self):
        lim = joint_limits(DesignParams((SegmentSpec(0.3, 2.0, 1),)), 10)
        assert lim.names[3:] == ("seg1_pan",)
        assert lim.upper[3] == pytest.approx(0.6)

    def test_rigid_has_three_dof(self):
        assert joint_limits(DesignParams(), 10).n_dof == 3
        assert DesignParams().n_dof == 3

    def test_dof_counts(self):
        assert SINGLE.n_dof == 5
        assert DesignParams((SegmentSpec(1, 1, 3), SegmentSpec(1, 1, 3))).n_dof == 7
        assert DOUBLE.n_dof == 6

    def test_invalid_segment(self):
        for args in [(0.0, 1, 1), (2.0, 1, 1), (1.0, 0, 1), (1.0, 1, 0), (1.0, 1, 1.5)]:
            with pytest.raises(ValueError):
                SegmentSpec(*args)


class TestSampling:
    def test_collapsed_limits(self):
        lim = joint_limits(DesignParams(pivot_limit=0.0), 0.0)
        assert np.array_equal(sample_config(lim, 5, 0), np.zeros(3))

    def test_mean_of_uniform(self):
        lim = joint_limits(DesignParams((SegmentSpec(0.5, 1, 1),)), 1.0)
        q = sample_configs(lim, 11, 0, 10_000)
        # seg1_pan on [-1, 1]; 3 sigma = 3 / sqrt(3) / 100
        assert abs(q[:, 3].mean()) < 0.05
        assert np.all(q >= lim.lower) and np.all(q <= lim.upper)

    def test_deterministic_and_sliceable(self):
        lim = joint_limits(DOUBLE, 30.0)
        a = sample_configs(lim, 7, 0, 100)
        b = sample_configs(lim, 7, 0, 100)
        assert np.array_equal(a, b)
        assert np.array_equal(sample_configs(lim, 7, 40, 10), a[40:50])
        assert np.array_equal(sample_config(lim, 7, 99), a[99])
        assert not np.array_equal(sample_configs(lim, 8, 0, 100), a)


class TestRollingJoint:
    def test_straight(self):
        T = rolling_joint_transform("pan", 0.0, 2.0)
        assert np.allclose(T.translation, [0, 0, 2])
        assert np.allclose(T.rotation, np.eye(3))

    def test_pan(self):
        T = rolling_joint_transform("pan", math.pi / 3, 2.0)
        assert np.allclose(T.translation, [0, -1, math.sqrt(3)], atol=1e-12)
        assert np.allclose(T.rotation, rot_x(math.pi / 3), atol=1e-12)

    def test_tilt(self):
        T = rolling_joint_transform("tilt", math.pi / 3, 2.0)
        assert np.allclose(T.translation, [1, 0, math.sqrt(3)], atol=1e-12)
        assert np.allclose(T.rotation, rot_y(math.pi / 3), atol=1e-12)


class TestForwardKinematics:
    def test_straight_single(self):
        q = np.array([0, 0, 10.0, 0, 0])
        T, skel = forward_kinematics(q, SINGLE)
        assert np.allclose(T.translation, [0, 0, 10 + 3 * 1.62 + 5], atol=1e-12)
        assert np.allclose(T.rotation, np.eye(3))
        assert np.allclose(skel[0], 0) and np.allclose(skel[-1], T.translation)

    def test_rigid_pivot(self):
        T, _ = forward_kinematics(np.array([math.pi / 2, 0, 0.0]), DesignParams(pivot_limit=math.pi / 2))
        assert np.allclose(T.translation, [0, -5, 0], atol=1e-12)
        assert np.allclose(T.z_axis, [0, -1, 0], atol=1e-12)

    def test_rejects_out_of_limits(self):
        with pytest.raises(ValueError):
            forward_kinematics(np.array([2.0, 0, 0, 0, 0]), SINGLE)
        with pytest.raises(ValueError):
            forward_kinematics(np.zeros(4), SINGLE)

    def test_brute_force_chain(self):
        # oracle: explicit 4x4 products, one disk at a time
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = random_design(rng, 2)
            lim = joint_limits(p, 30)
            q = lim.lower + (lim.upper - lim.lower) * rng.random(lim.n_dof)

            def h(R, t=(0, 0, 0)):
                M = np.eye(4)
                M[:3, :3] = R
                M[:3, 3] = t
                return M

            M = h(rot_x(q[0])) @ h(rot_y(q[1])) @ h(np.eye(3), (0, 0, q[2]))
            j = 3
            for k, s in enumerate(p.segments):
                if k:
                    M = M @ h(rot_z(-math.pi / 2))
                pan = q[j] / s.n_pan
                tilt = q[j + 1] / s.n_tilt if s.n_tilt else 0.0
                j += s.dof
                for disk in range(s.n):
                    rot = rot_x(pan / 2) if disk % 2 == 0 else rot_y(tilt / 2)
                    M = M @ h(rot) @ h(np.eye(3), (0, 0, s.d)) @ h(rot)
            M = M @ h(np.eye(3), (0, 0, 5.0))
            T, _ = forward_kinematics(q, p, limits=lim)
            assert np.allclose(T.matrix, M, atol=1e-10)

    def test_kernel_matches_reference(self):
        rng = np.random.default_rng(1)
        for s in (0, 1, 2, 3):
            p = random_design(rng, s)
            lim = joint_limits(p, 30)
            args = _kernel_design_args(p, lim)
            R = np.empty((3, 3))
            pts = np.empty((sum(x.n for x in p.segments) + 3, 3))
            for i in range(100):
                q = sample_config(lim, s, i)
                T, _ = forward_kinematics(q, p, limits=lim)
                n = _kernels.chain(q, *args, R, pts)
                assert np.allclose(R, T.rotation, atol=1e-12)
                assert np.allclose(pts[n - 1], T.translation, atol=1e-10)

    def test_pan_only_bend_angle(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p = random_design(rng, 1)
            lim = joint_limits(p, 10)
            q = np.zeros(p.n_dof)
            q[3] = rng.uniform(lim.lower[3], lim.upper[3])
            T, _ = forward_kinematics(q, p, limits=lim)
            z = T.z_axis
            angle = math.atan2(math.hypot(z[0], z[1]), z[2])
            assert angle == pytest.approx(abs(q[3]), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.floats(0.5, 4.0))
    def test_skeleton_spacing(self, seed, s, edge):
        rng = np.random.default_rng(seed)
        p = random_design(rng, s)
        lim = joint_limits(p, 30)
        q = lim.lower + (lim.upper - lim.lower) * rng.random(lim.n_dof)
        T, skel = forward_kinematics(q, p, edge, lim)
        gaps = np.linalg.norm(np.diff(skel, axis=0), axis=1)
        assert gaps.max() <= edge / 2 + 1e-12
        assert np.allclose(skel[-1], T.translation)

    def test_skeleton_length_constant(self):
        rng = np.random.default_rng(3)
        p = DOUBLE
        lim = joint_limits(p, 30)
        lengths = []
        for _ in range(200):
            q = lim.lower + (lim.upper - lim.lower) * rng.random(lim.n_dof)
            q[2] = 12.0
            lengths.append(skeleton_length(forward_kinematics(q, p, 2.0, lim)[1]))
        expected = 12.0 + 6.0 + 3 * 0.41 + 5.0
        assert np.allclose(lengths, expected, rtol=0.01)

    def test_no_roll_dof(self):
        assert not any("roll" in n for n in joint_limits(DOUBLE, 10).names)

    def test_transition_twist(self):
        assert DOUBLE.transition_angle == pytest.approx(-math.pi / 2)
        triple = DesignParams((SegmentSpec(1, 1, 2),) * 3)
        assert triple.transition_angle == pytest.approx(-math.pi / 3)
