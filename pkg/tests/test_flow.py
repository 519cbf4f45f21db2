import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from marinesim.geometry import CameraIntrinsics, Pose, RigidBodyState
from marinesim.flow import (
    MissingBodyStateError,
    fragment_velocity,
    project_flow,
    render_flow,
)
from marinesim.mesh import make_quad, make_sphere
from marinesim.scene import Scene, SceneInstance


def project_point(p, f, intr):
    """Pinhole projection used by the finite-difference oracle."""
    px, py = intr.principal_point
    return np.array([f * p[0] / p[2] + px, f * p[1] / p[2] + py])


def finite_difference_flow(frag_world, body, camera, intr, dt=1e-6):
    """Move the fragment with the body and the camera with its own twist for
    a short dt, reproject, and difference the pixel coordinates."""
    c_body = body.center_of_rotation_world()
    v_frag = body.linear_velocity + np.cross(
        body.angular_velocity, frag_world - c_body)
    frag_next = frag_world + dt * v_frag

    cam_pos_next = camera.pose.position + dt * camera.linear_velocity
    rot_delta = Rotation.from_rotvec(dt * camera.angular_velocity)
    cam_rot_next = rot_delta * camera.pose.rotation

    p0 = camera.pose.rotation.inv().apply(frag_world - camera.pose.position)
    p1 = cam_rot_next.inv().apply(frag_next - cam_pos_next)
    f = intr.focal_length
    return (project_point(p1, f, intr) - project_point(p0, f, intr)) / dt


class TestProjectFlow:
    def test_pure_axial_motion_on_axis_is_zero(self):
        uv = project_flow([0, 0, 1.0], [0, 0, 5.0], 10.0)
        assert np.allclose(uv, 0)

    def test_lateral_motion(self):
        # point at depth 2, moving at 1 m/s in x: u = f * vx / Z
        uv = project_flow([1.0, 0, 0], [0, 0, 2.0], 8.0)
        assert np.allclose(uv, [4.0, 0.0])

    def test_behind_camera_rejected(self):
        with pytest.raises(ValueError):
            project_flow([0, 0, 1], [0, 0, -1.0], 8.0)


class TestFragmentVelocityOracle:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_finite_difference_projection(self, seed):
        rng = np.random.default_rng(seed)
        intr = CameraIntrinsics(32, 32, 40.0)

        cam_pose = Pose(rng.uniform(-1, 1, 3),
                        Rotation.random(random_state=int(rng.integers(1 << 30))).as_quat())
        camera = RigidBodyState(cam_pose,
                                linear_velocity=rng.uniform(-1, 1, 3),
                                angular_velocity=rng.uniform(-0.5, 0.5, 3))
        body = RigidBodyState(
            Pose(rng.uniform(-1, 1, 3)),
            linear_velocity=rng.uniform(-1, 1, 3),
            angular_velocity=rng.uniform(-0.5, 0.5, 3),
            center_of_rotation=rng.uniform(-0.2, 0.2, 3),
        )
        # fragment placed in front of the camera at a random image position
        depth = rng.uniform(1.5, 6.0)
        p_cam = np.array([rng.uniform(-0.3, 0.3) * depth,
                          rng.uniform(-0.3, 0.3) * depth, depth])
        frag_world = cam_pose.transform_point(p_cam)

        v_cam = fragment_velocity(frag_world, body, camera)
        analytic = project_flow(v_cam, p_cam, intr.focal_length)
        numeric = finite_difference_flow(frag_world, body, camera, intr)

        tol = max(1e-3, 1e-3 * np.linalg.norm(analytic))
        assert np.allclose(analytic, numeric, atol=tol)


class TestRenderFlow:
    def test_static_everything_zero_flow(self):
        wall = make_quad(100, 100, center=(0, 0, 3), normal=(0, 0, -1))
        scene = Scene([SceneInstance("wall", wall)])
        intr = CameraIntrinsics(8, 8, 8.0)
        cam = RigidBodyState.at_rest(Pose.identity())
        field = render_flow(scene, cam, intr, {"wall": RigidBodyState.at_rest(Pose.identity())})
        assert field.validity.all()
        assert np.allclose(field.flow, 0)

    def test_translating_wall_uniform_flow(self):
        wall = make_quad(100, 100, center=(0, 0, 2), normal=(0, 0, -1))
        scene = Scene([SceneInstance("wall", wall)])
        intr = CameraIntrinsics(8, 8, 8.0)
        cam = RigidBodyState.at_rest(Pose.identity())
        body = RigidBodyState(Pose(np.array([0.0, 0.0, 2.0])),
                              linear_velocity=np.array([0.5, 0.0, 0.0]))
        field = render_flow(scene, cam, intr, {"wall": body})
        # fronto-parallel plane translating in x: u = f*vx/Z everywhere
        assert np.allclose(field.flow[..., 0], 8.0 * 0.5 / 2.0, atol=1e-9)
        assert np.allclose(field.flow[..., 1], 0.0, atol=1e-9)

    def test_background_invalid_with_zero_flow(self):
        sphere = make_sphere(0.5, center=(0, 0, 3), subdivisions=24)
        scene = Scene([SceneInstance("s", sphere)])
        intr = CameraIntrinsics(16, 16, 16.0)
        cam = RigidBodyState.at_rest(Pose.identity())
        field = render_flow(scene, cam, intr, {"s": RigidBodyState.at_rest(Pose.identity())})
        assert field.validity.any() and not field.validity.all()
        assert np.allclose(field.flow[~field.validity], 0)

    def test_missing_body_state_raises(self):
        wall = make_quad(10, 10, center=(0, 0, 2), normal=(0, 0, -1))
        scene = Scene([SceneInstance("wall", wall)])
        intr = CameraIntrinsics(4, 4, 4.0)
        cam = RigidBodyState.at_rest(Pose.identity())
        with pytest.raises(MissingBodyStateError):
            render_flow(scene, cam, intr, {})
