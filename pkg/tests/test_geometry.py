import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from marinesim.geometry import (
    HOLD,
    LINEAR,
    CameraIntrinsics,
    KinematicTrajectory,
    Pose,
    sample_trajectory,
)


def yaw_pose(deg, position=(0, 0, 0)):
    return Pose(np.asarray(position, dtype=float),
                Rotation.from_euler("z", deg, degrees=True).as_quat())


class TestPose:
    def test_quaternion_normalized(self):
        with pytest.raises(ValueError):
            Pose(np.zeros(3), np.array([1.0, 1.0, 1.0, 1.0]))

    def test_compose_roundtrip(self):
        parent = yaw_pose(90, (1, 0, 0))
        child = Pose(np.array([1.0, 0.0, 0.0]))
        world = parent.compose(child)
        assert np.allclose(world.position, [1, 1, 0], atol=1e-12)
        assert np.allclose(parent.inverse_transform_point(world.position), child.position)


class TestIntrinsics:
    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(0, 10, 5.0)
        with pytest.raises(ValueError):
            CameraIntrinsics(10, 10, 0.0)

    def test_default_principal_point_centered(self):
        intr = CameraIntrinsics(11, 7, 5.0)
        assert intr.principal_point == (5.0, 3.0)


class TestTrajectory:
    def test_times_must_increase(self):
        with pytest.raises(ValueError):
            KinematicTrajectory([0.0, 0.0], (Pose.identity(), Pose.identity()))

    def test_single_waypoint_holds_forever(self):
        traj = KinematicTrajectory.static(yaw_pose(30, (1, 2, 3)))
        for t in (-5.0, 0.0, 100.0):
            st = sample_trajectory(traj, t)
            assert np.allclose(st.pose.position, [1, 2, 3])
            assert np.allclose(st.linear_velocity, 0)
            assert np.allclose(st.angular_velocity, 0)

    def test_linear_position_interpolation(self):
        traj = KinematicTrajectory(
            [0.0, 2.0],
            (Pose(np.zeros(3)), Pose(np.array([4.0, 0.0, 0.0]))),
            LINEAR,
        )
        st = sample_trajectory(traj, 1.0)
        assert np.allclose(st.pose.position, [2, 0, 0])
        assert np.allclose(st.linear_velocity, [2, 0, 0])

    def test_hold_keeps_previous_waypoint(self):
        traj = KinematicTrajectory(
            [0.0, 1.0],
            (Pose(np.zeros(3)), Pose(np.array([1.0, 0.0, 0.0]))),
            HOLD,
        )
        st = sample_trajectory(traj, 0.99)
        assert np.allclose(st.pose.position, 0)
        assert np.allclose(st.linear_velocity, 0)

    def test_slerp_yaw_and_angular_velocity(self):
        # 90 deg yaw over 1 s; oracle is the quaternion slerp derivative
        traj = KinematicTrajectory([0.0, 1.0], (yaw_pose(0), yaw_pose(90)), LINEAR)
        st = sample_trajectory(traj, 0.5)
        yaw = st.pose.rotation.as_euler("zyx")[0]
        assert math.isclose(yaw, math.pi / 4, abs_tol=1e-9)
        assert math.isclose(np.linalg.norm(st.angular_velocity), math.pi / 2, abs_tol=1e-9)
        # finite-difference check of the angular rate
        dt = 1e-7
        q0 = sample_trajectory(traj, 0.5).pose.rotation
        q1 = sample_trajectory(traj, 0.5 + dt).pose.rotation
        w_fd = (q1 * q0.inv()).as_rotvec() / dt
        assert np.allclose(w_fd, st.angular_velocity, atol=1e-5)

    def test_outside_span_clamps_with_zero_velocity(self):
        traj = KinematicTrajectory(
            [1.0, 2.0],
            (Pose(np.zeros(3)), Pose(np.array([1.0, 0.0, 0.0]))),
            LINEAR,
        )
        before = sample_trajectory(traj, 0.0)
        after = sample_trajectory(traj, 3.0)
        assert np.allclose(before.pose.position, 0)
        assert np.allclose(after.pose.position, [1, 0, 0])
        assert np.allclose(before.linear_velocity, 0)
        assert np.allclose(after.linear_velocity, 0)

    def test_continuity_at_waypoints(self):
        traj = KinematicTrajectory(
            [0.0, 1.0, 2.0],
            (Pose(np.zeros(3)), Pose(np.array([1.0, 1.0, 0.0])), Pose(np.array([0.0, 2.0, 0.0]))),
            LINEAR,
        )
        eps = 1e-10
        for tw in (1.0, 2.0):
            a = sample_trajectory(traj, tw - eps).pose.position
            b = sample_trajectory(traj, min(tw + eps, 2.0)).pose.position
            assert np.linalg.norm(a - b) < 1e-9
