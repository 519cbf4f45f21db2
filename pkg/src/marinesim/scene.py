"""Scene assembly and per-pixel render buffers produced by CPU ray casting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraIntrinsics, KinematicTrajectory, Pose, RigidBodyState, sample_trajectory
from .mesh import Material, TriangleMesh
from .raycast import BVH, RAY_EPSILON, brute_force_raycast

BACKGROUND_ID = 0


@dataclass(frozen=True)
class LightingEnvironment:
    """Directional sun plus ambient term for the luminance plane."""

    sun_direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    ambient: float = 0.2
    sun_occlusion: bool = False

    def __post_init__(self):
        d = np.asarray(self.sun_direction, dtype=np.float64)
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("sun_direction must be non-zero")
        object.__setattr__(self, "sun_direction", d / n)
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError("ambient must be in [0, 1]")


@dataclass
class SceneInstance:
    name: str
    mesh: TriangleMesh
    material: Material = field(default_factory=Material)
    trajectory: KinematicTrajectory = None

    def __post_init__(self):
        if self.trajectory is None:
            self.trajectory = KinematicTrajectory.static(Pose.identity())

    def state_at(self, t) -> RigidBodyState:
        return sample_trajectory(self.trajectory, t)


@dataclass(frozen=True)
class Hit:
    instance_id: int  # 1-based; 0 is background
    range: float
    point: np.ndarray
    normal: np.ndarray
    material: Material
    uv: np.ndarray = None

    @property
    def instance_name(self):
        return None


class SceneSnapshot:
    """World-space triangle soup of a scene at one instant, with a BVH."""

    def __init__(self, instances, states, water_z=None):
        self.instances = list(instances)
        self.states = list(states)
        self.water_z = water_z
        v0s, v1s, v2s, n0s, n1s, n2s, uv_list, tri_inst = [], [], [], [], [], [], [], []
        for idx, (inst, state) in enumerate(zip(self.instances, self.states)):
            mesh = inst.mesh
            rot = state.pose.rotation
            verts = rot.apply(mesh.vertices) + state.pose.position
            normals = rot.apply(mesh.normals)
            tri = mesh.triangles
            v0s.append(verts[tri[:, 0]])
            v1s.append(verts[tri[:, 1]])
            v2s.append(verts[tri[:, 2]])
            n0s.append(normals[tri[:, 0]])
            n1s.append(normals[tri[:, 1]])
            n2s.append(normals[tri[:, 2]])
            if mesh.uvs is not None:
                uv_list.append(mesh.uvs[tri].reshape(-1, 3, 2))
            else:
                uv_list.append(np.zeros((len(tri), 3, 2)))
            tri_inst.append(np.full(len(tri), idx + 1, dtype=np.int64))

        if v0s:
            self.v0 = np.concatenate(v0s)
            self.v1 = np.concatenate(v1s)
            self.v2 = np.concatenate(v2s)
            self.n0 = np.concatenate(n0s)
            self.n1 = np.concatenate(n1s)
            self.n2 = np.concatenate(n2s)
            self.tri_uvs = np.concatenate(uv_list)
            self.tri_instance = np.concatenate(tri_inst)
        else:
            self.v0 = self.v1 = self.v2 = np.zeros((0, 3))
            self.n0 = self.n1 = self.n2 = np.zeros((0, 3))
            self.tri_uvs = np.zeros((0, 3, 2))
            self.tri_instance = np.zeros(0, dtype=np.int64)
        self.bvh = BVH(self.v0, self.v1, self.v2)

    def raycast(self, origin, direction, brute_force=False):
        """Nearest hit of a world-space ray; direction must be unit length."""
        direction = np.asarray(direction, dtype=np.float64)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise ValueError("ray direction must be a unit vector")
        if brute_force:
            res = brute_force_raycast(origin, direction, self.v0, self.v1, self.v2)
        else:
            res = self.bvh.raycast(origin, direction)
        if res is None:
            return None
        k, t, u, v = res
        w = 1.0 - u - v
        normal = w * self.n0[k] + u * self.n1[k] + v * self.n2[k]
        nn = np.linalg.norm(normal)
        if nn > 0:
            normal = normal / nn
        uv = w * self.tri_uvs[k, 0] + u * self.tri_uvs[k, 1] + v * self.tri_uvs[k, 2]
        inst = int(self.tri_instance[k])
        return Hit(
            instance_id=inst,
            range=t,
            point=np.asarray(origin, dtype=np.float64) + t * direction,
            normal=normal,
            material=self.instances[inst - 1].material,
            uv=uv,
        )

    def occluded(self, p_from, p_to):
        return self.bvh.occluded(p_from, p_to)

    def sun_visible(self, point, sun_direction):
        """Cast an occlusion ray toward the sun from an epsilon-offset origin."""
        origin = np.asarray(point, dtype=np.float64) + np.asarray(sun_direction) * RAY_EPSILON
        return self.bvh.raycast(origin, np.asarray(sun_direction, dtype=np.float64)) is None


class Scene:
    """Immutable collection of mesh instances; snapshots are taken per time instant."""

    def __init__(self, instances=(), water_z=None):
        self.instances = list(instances)
        self.water_z = water_z
        names = [i.name for i in self.instances]
        if len(set(names)) != len(names):
            raise ValueError("instance names must be unique")
        self._static = all(
            len(i.trajectory.times) == 1 for i in self.instances
        )
        self._static_snapshot = None

    def instance_index(self, name):
        for i, inst in enumerate(self.instances):
            if inst.name == name:
                return i + 1
        raise KeyError(name)

    def states_at(self, t):
        return [inst.state_at(t) for inst in self.instances]

    def snapshot(self, t=0.0) -> SceneSnapshot:
        if self._static and self._static_snapshot is not None:
            return self._static_snapshot
        snap = SceneSnapshot(self.instances, self.states_at(t), self.water_z)
        if self._static:
            self._static_snapshot = snap
        return snap


@dataclass
class RenderBuffers:
    """Per-pixel planes shared by all image-like sensors; arrays indexed [row, col]."""

    depth: np.ndarray      # meters along the optical axis; +inf where no hit
    range: np.ndarray      # meters along the ray; +inf where no hit
    normal: np.ndarray     # (H, W, 3) world-frame unit normals
    instance_id: np.ndarray
    class_id: np.ndarray
    luminance: np.ndarray

    @property
    def width(self):
        return self.depth.shape[1]

    @property
    def height(self):
        return self.depth.shape[0]


def pixel_ray_directions(intr: CameraIntrinsics):
    """Unit ray directions through pixel centers, camera frame (x right, y down, z forward).

    Returns an (H, W, 3) array.
    """
    px, py = intr.principal_point
    us = (np.arange(intr.width) - px) / intr.focal_length
    vs = (np.arange(intr.height) - py) / intr.focal_length
    uu, vv = np.meshgrid(us, vs)
    dirs = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return dirs


def render_buffers(
    scene_or_snapshot,
    camera_pose: Pose,
    intr: CameraIntrinsics,
    lighting: LightingEnvironment = None,
) -> RenderBuffers:
    """Cast one primary ray per pixel center and shade a Lambertian luminance plane."""
    snap = scene_or_snapshot.snapshot() if isinstance(scene_or_snapshot, Scene) else scene_or_snapshot
    if lighting is None:
        lighting = LightingEnvironment()
    W, H = intr.width, intr.height
    depth = np.full((H, W), np.inf)
    rng = np.full((H, W), np.inf)
    normal = np.zeros((H, W, 3))
    instance_id = np.zeros((H, W), dtype=np.int32)
    class_id = np.zeros((H, W), dtype=np.int32)
    luminance = np.zeros((H, W))

    dirs_cam = pixel_ray_directions(intr)
    rot = camera_pose.rotation
    origin = camera_pose.position
    sun = lighting.sun_direction

    for row in range(H):
        dirs_world = rot.apply(dirs_cam[row])
        for col in range(W):
            hit = snap.raycast(origin, dirs_world[col])
            if hit is None:
                continue
            depth[row, col] = hit.range * dirs_cam[row, col, 2]
            rng[row, col] = hit.range
            normal[row, col] = hit.normal
            instance_id[row, col] = hit.instance_id
            class_id[row, col] = hit.material.class_id
            diffuse = max(0.0, float(np.dot(hit.normal, sun)))
            if diffuse > 0 and lighting.sun_occlusion and not snap.sun_visible(hit.point, sun):
                diffuse = 0.0
            luminance[row, col] = hit.material.albedo * (lighting.ambient + diffuse)

    return RenderBuffers(depth, rng, normal, instance_id, class_id, luminance)
