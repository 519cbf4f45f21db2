"""Ground-truth optical flow from scene geometry and rigid-body motion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics, RigidBodyState
from .scene import Scene, pixel_ray_directions


@dataclass
class FlowField:
    flow: np.ndarray       # (H, W, 2) pixels/s; (0, 0) at invalid pixels
    validity: np.ndarray   # (H, W) bool; False at background


class MissingBodyStateError(KeyError):
    """A visible instance has no motion state entry."""


def fragment_velocity(frag_world, body: RigidBodyState, camera: RigidBodyState):
    """Velocity of a surface fragment relative to the camera, in the camera frame.

    Combines body translation/rotation about its center of rotation with the
    camera's own translation and rotation about its position.
    """
    frag_world = np.asarray(frag_world, dtype=np.float64)
    c_body = body.center_of_rotation_world()
    p_cam = camera.pose.position
    v_world = (
        body.linear_velocity
        + np.cross(body.angular_velocity, frag_world - c_body)
        - camera.linear_velocity
        - np.cross(camera.angular_velocity, frag_world - p_cam)
    )
    return camera.pose.rotation.inv().apply(v_world)


def project_flow(v_cam, p_cam_frame, focal_length):
    """Image-plane velocity (px/s) of a camera-frame point moving at v_cam.

    Time derivative of the pinhole projection; requires positive depth Z.
    """
    x, y, z = np.asarray(p_cam_frame, dtype=np.float64)
    if z <= 0:
        raise ValueError("fragment behind camera (Z <= 0)")
    vx, vy, vz = np.asarray(v_cam, dtype=np.float64)
    u = focal_length * (vx * z - x * vz) / (z * z)
    v = focal_length * (vy * z - y * vz) / (z * z)
    return np.array([u, v])


def render_flow(scene, camera_state: RigidBodyState, intr: CameraIntrinsics,
                body_states: dict) -> FlowField:
    """Dense flow field; body_states maps instance name -> RigidBodyState."""
    snap = scene.snapshot() if isinstance(scene, Scene) else scene
    W, H = intr.width, intr.height
    flow = np.zeros((H, W, 2))
    validity = np.zeros((H, W), dtype=bool)

    dirs_cam = pixel_ray_directions(intr)
    rot = camera_state.pose.rotation
    origin = camera_state.pose.position

    for row in range(H):
        dirs_world = rot.apply(dirs_cam[row])
        for col in range(W):
            hit = snap.raycast(origin, dirs_world[col])
            if hit is None:
                continue
            name = snap.instances[hit.instance_id - 1].name
            if name not in body_states:
                raise MissingBodyStateError(
                    f"no body state for visible instance {name!r}"
                )
            v_cam = fragment_velocity(hit.point, body_states[name], camera_state)
            p_cam = hit.range * dirs_cam[row, col]
            flow[row, col] = project_flow(v_cam, p_cam, intr.focal_length)
            validity[row, col] = True

    return FlowField(flow, validity)
