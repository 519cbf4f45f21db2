"""Triangle meshes, materials and mesh construction helpers (OBJ subset, primitives)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

AIR_TEMPERATURE = "air"
CONSTANT = "constant"
TEMPERATURE_MAP = "map"


@dataclass(frozen=True)
class ThermalMode:
    """How a surface resolves its base temperature."""

    kind: str = AIR_TEMPERATURE
    constant_celsius: float = 0.0
    temperature_map: np.ndarray = None  # 2-D grid of degrees C, row-major

    def __post_init__(self):
        if self.kind not in (AIR_TEMPERATURE, CONSTANT, TEMPERATURE_MAP):
            raise ValueError(f"unknown thermal mode {self.kind!r}")
        if self.kind == TEMPERATURE_MAP:
            grid = np.asarray(self.temperature_map, dtype=np.float64)
            if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
                raise ValueError("temperature map must be a 2-D grid of at least 1x1")
            if not np.all(np.isfinite(grid)):
                raise ValueError("temperature map entries must be finite")
            object.__setattr__(self, "temperature_map", grid)

    @classmethod
    def constant(cls, celsius):
        return cls(kind=CONSTANT, constant_celsius=float(celsius))

    @classmethod
    def from_map(cls, grid):
        return cls(kind=TEMPERATURE_MAP, temperature_map=grid)


@dataclass(frozen=True)
class Material:
    albedo: float = 0.8
    roughness: float = 0.5
    acoustic_reflectivity: float = 0.8
    thermal: ThermalMode = field(default_factory=ThermalMode)
    class_id: int = 1

    def __post_init__(self):
        for name in ("albedo", "roughness", "acoustic_reflectivity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.class_id < 0:
            raise ValueError("class_id must be non-negative")


class TriangleMesh:
    """Indexed triangle mesh with per-vertex unit normals and optional UVs."""

    def __init__(self, vertices, triangles, normals=None, uvs=None):
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        nv = len(self.vertices)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise ValueError("triangle index out of range")

        v0 = self.vertices[self.triangles[:, 0]]
        v1 = self.vertices[self.triangles[:, 1]]
        v2 = self.vertices[self.triangles[:, 2]]
        cross = np.cross(v1 - v0, v2 - v0)
        areas2 = np.linalg.norm(cross, axis=1)
        if np.any(areas2 <= 1e-12):
            raise ValueError("degenerate (zero-area) triangle in mesh")

        if normals is None:
            normals = self._area_weighted_vertex_normals(cross)
        self.normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
        if len(self.normals) != nv:
            raise ValueError("one normal per vertex required")
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("vertex normals must be unit length")

        self.uvs = None
        if uvs is not None:
            self.uvs = np.asarray(uvs, dtype=np.float64).reshape(-1, 2)
            if len(self.uvs) != nv:
                raise ValueError("one UV per vertex required")

    def _area_weighted_vertex_normals(self, face_cross):
        acc = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(acc, self.triangles[:, k], face_cross)
        lens = np.linalg.norm(acc, axis=1)
        lens[lens == 0] = 1.0
        return acc / lens[:, None]

    @property
    def num_triangles(self):
        return len(self.triangles)


def load_obj(path) -> TriangleMesh:
    """Load the `v`/`vn`/`f` subset of Wavefront OBJ.

    Faces may reference normals (`v//vn` or `v/vt/vn`); polygons are fan
    triangulated. When normals are absent they are computed from geometry.
    """
    verts, norms, faces, face_norms = [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                norms.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx, nidx = [], []
                for tok in parts[1:]:
                    comps = tok.split("/")
                    idx.append(int(comps[0]) - 1)
                    if len(comps) == 3 and comps[2]:
                        nidx.append(int(comps[2]) - 1)
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
                    if len(nidx) == len(idx):
                        face_norms.append([nidx[0], nidx[k], nidx[k + 1]])

    vertex_normals = None
    if norms and len(face_norms) == len(faces):
        vertex_normals = np.zeros((len(verts), 3))
        counts = np.zeros(len(verts))
        narr = np.asarray(norms)
        for f, fn in zip(faces, face_norms):
            for vi, ni in zip(f, fn):
                vertex_normals[vi] += narr[ni]
                counts[vi] += 1
        counts[counts == 0] = 1.0
        vertex_normals /= counts[:, None]
        lens = np.linalg.norm(vertex_normals, axis=1)
        lens[lens == 0] = 1.0
        vertex_normals /= lens[:, None]
    return TriangleMesh(verts, faces, vertex_normals)


def make_box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with flat (face) normals via duplicated vertices."""
    sx, sy, sz = [s / 2.0 for s in size]
    cx, cy, cz = center
    verts, tris, normals = [], [], []
    # (axis, sign) face list
    for axis, sign in [(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)]:
        n = np.zeros(3)
        n[axis] = sign
        u = np.zeros(3)
        u[(axis + 1) % 3] = 1.0
        v = np.cross(n, u)
        half = np.array([sx, sy, sz])
        c = np.array([cx, cy, cz]) + n * half
        base = len(verts)
        for du, dv in [(-1, -1), (1, -1), (1, 1), (-1, 1)]:
            verts.append(c + du * u * half + dv * v * half)
            normals.append(n)
        if sign > 0:
            tris += [[base, base + 1, base + 2], [base, base + 2, base + 3]]
        else:
            tris += [[base, base + 2, base + 1], [base, base + 3, base + 2]]
    return TriangleMesh(verts, tris, normals)


def make_sphere(radius=1.0, center=(0.0, 0.0, 0.0), subdivisions=24) -> TriangleMesh:
    """UV sphere with exact outward vertex normals."""
    n_lat, n_lon = subdivisions, subdivisions * 2
    verts, normals = [], []
    for i in range(n_lat + 1):
        theta = math.pi * i / n_lat
        for j in range(n_lon):
            phi = 2 * math.pi * j / n_lon
            d = np.array(
                [
                    math.sin(theta) * math.cos(phi),
                    math.sin(theta) * math.sin(phi),
                    math.cos(theta),
                ]
            )
            verts.append(np.asarray(center) + radius * d)
            normals.append(d)
    tris = []
    for i in range(n_lat):
        for j in range(n_lon):
            a = i * n_lon + j
            b = i * n_lon + (j + 1) % n_lon
            c = (i + 1) * n_lon + j
            d = (i + 1) * n_lon + (j + 1) % n_lon
            if i > 0:
                tris.append([a, c, b])
            if i < n_lat - 1:
                tris.append([b, c, d])
    return TriangleMesh(verts, tris, normals)


def make_quad(width, height, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)) -> TriangleMesh:
    """Flat rectangle facing `normal`, UV-mapped over [0,1]^2."""
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, ref)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    c = np.asarray(center, dtype=np.float64)
    verts = [
        c - u * width / 2 - v * height / 2,
        c + u * width / 2 - v * height / 2,
        c + u * width / 2 + v * height / 2,
        c - u * width / 2 + v * height / 2,
    ]
    uvs = [(0, 0), (1, 0), (1, 1), (0, 1)]
    tris = [[0, 1, 2], [0, 2, 3]]
    # keep winding consistent with the requested normal
    w = np.cross(verts[1] - verts[0], verts[2] - verts[0])
    if np.dot(w, n) < 0:
        tris = [[0, 2, 1], [0, 3, 2]]
    return TriangleMesh(verts, tris, [n] * 4, uvs)
