"""Headless, deterministic marine-robotics sensor and actuator simulation kit."""

__version__ = "0.1.0"

from .geometry import CameraIntrinsics, KinematicTrajectory, Pose, RigidBodyState, sample_trajectory
from .mesh import Material, ThermalMode, TriangleMesh, load_obj, make_box, make_quad, make_sphere
from .scene import LightingEnvironment, RenderBuffers, Scene, SceneInstance, render_buffers

__all__ = [
    "CameraIntrinsics",
    "KinematicTrajectory",
    "LightingEnvironment",
    "Material",
    "Pose",
    "RenderBuffers",
    "RigidBodyState",
    "Scene",
    "SceneInstance",
    "ThermalMode",
    "TriangleMesh",
    "load_obj",
    "make_box",
    "make_quad",
    "make_sphere",
    "render_buffers",
    "sample_trajectory",
]
