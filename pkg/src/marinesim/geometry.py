"""Poses, rigid-body states, camera intrinsics and kinematic trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

_UNIT_TOL = 1e-9


def _as_vec3(v):
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {a.shape}")
    return a


def _as_quat(q):
    a = np.asarray(q, dtype=np.float64)
    if a.shape != (4,):
        raise ValueError(f"expected quaternion (x, y, z, w), got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position in meters, orientation as unit quaternion (x, y, z, w)."""

    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position))
        q = _as_quat(self.orientation)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} is not 1")
        object.__setattr__(self, "orientation", q / n)

    @property
    def rotation(self) -> Rotation:
        return Rotation.from_quat(self.orientation)

    def transform_point(self, p):
        return self.rotation.apply(_as_vec3(p)) + self.position

    def transform_direction(self, d):
        return self.rotation.apply(_as_vec3(d))

    def inverse_transform_point(self, p):
        return self.rotation.inv().apply(_as_vec3(p) - self.position)

    def compose(self, local: "Pose") -> "Pose":
        """World pose of a child given its pose in this frame."""
        return Pose(
            self.transform_point(local.position),
            (self.rotation * local.rotation).as_quat(),
        )

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3))


@dataclass(frozen=True)
class RigidBodyState:
    """Pose plus twist; center_of_rotation is expressed in the body frame."""

    pose: Pose
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    center_of_rotation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("linear_velocity", "angular_velocity", "center_of_rotation"):
            v = _as_vec3(getattr(self, name))
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def center_of_rotation_world(self):
        return self.pose.transform_point(self.center_of_rotation)

    @staticmethod
    def at_rest(pose: Pose) -> "RigidBodyState":
        return RigidBodyState(pose=pose)


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int
    height: int
    focal_length: float
    principal_point: tuple = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.focal_length <= 0:
            raise ValueError("focal length must be positive")
        pp = self.principal_point
        if pp is None:
            pp = ((self.width - 1) / 2.0, (self.height - 1) / 2.0)
        object.__setattr__(self, "principal_point", (float(pp[0]), float(pp[1])))


HOLD = "hold"
LINEAR = "linear"


@dataclass(frozen=True)
class KinematicTrajectory:
    """Time-ordered waypoints with hold or linear (position lerp / quaternion slerp) interpolation."""

    times: np.ndarray
    poses: tuple
    interpolation: str = LINEAR

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("at least one waypoint required")
        if np.any(np.diff(t) <= 0):
            raise ValueError("waypoint times must be strictly increasing")
        if len(self.poses) != t.size:
            raise ValueError("times and poses length mismatch")
        if self.interpolation not in (HOLD, LINEAR):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "poses", tuple(self.poses))

    @staticmethod
    def static(pose: Pose) -> "KinematicTrajectory":
        return KinematicTrajectory(np.array([0.0]), (pose,), HOLD)


def sample_trajectory(traj: KinematicTrajectory, t: float) -> RigidBodyState:
    """Sample pose and analytic velocities at time t.

    Outside the waypoint span the nearest endpoint pose is held with zero
    velocities. Hold interpolation keeps the last waypoint at or before t.
    Linear interpolation lerps position and slerps orientation per segment,
    giving piecewise-constant linear and angular velocities.
    """
    times, poses = traj.times, traj.poses
    if t <= times[0]:
        return RigidBodyState.at_rest(poses[0])
    if t >= times[-1]:
        return RigidBodyState.at_rest(poses[-1])

    i = int(np.searchsorted(times, t, side="right") - 1)
    if traj.interpolation == HOLD:
        return RigidBodyState.at_rest(poses[i])

    p0, p1 = poses[i], poses[i + 1]
    t0, t1 = times[i], times[i + 1]
    dt = t1 - t0
    u = (t - t0) / dt

    pos = (1.0 - u) * p0.position + u * p1.position
    lin_vel = (p1.position - p0.position) / dt

    r0, r1 = p0.rotation, p1.rotation
    rel = r0.inv() * r1
    rotvec = rel.as_rotvec()  # body-frame axis-angle of the segment
    orient = r0 * Rotation.from_rotvec(u * rotvec)
    # constant world-frame angular velocity of the slerp segment
    ang_vel = r0.apply(rotvec / dt)

    return RigidBodyState(
        pose=Pose(pos, orient.as_quat()),
        linear_velocity=lin_vel,
        angular_velocity=ang_vel,
    )
