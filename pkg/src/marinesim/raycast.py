"""Ray/triangle intersection with a bounding-volume hierarchy over a triangle soup."""

from __future__ import annotations

import numpy as np

RAY_EPSILON = 1e-6  # origin offset for secondary/occlusion rays
_LEAF_SIZE = 8


def intersect_triangles(origin, direction, v0, v1, v2):
    """Moller-Trumbore test of one ray against triangle arrays.

    Returns (t, u, v) arrays with t = +inf where there is no hit.
    """
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    inv_det = np.where(np.abs(det) > 1e-14, 1.0 / np.where(det == 0, 1.0, det), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.dot(qvec, direction) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    valid = (
        (np.abs(det) > 1e-14)
        & (u >= -1e-9)
        & (v >= -1e-9)
        & (u + v <= 1.0 + 1e-9)
        & (t > RAY_EPSILON)
    )
    t = np.where(valid, t, np.inf)
    return t, u, v


class BVH:
    """Axis-aligned BVH, median split on the longest centroid axis."""

    def __init__(self, v0, v1, v2):
        self.v0 = np.asarray(v0, dtype=np.float64).reshape(-1, 3)
        self.v1 = np.asarray(v1, dtype=np.float64).reshape(-1, 3)
        self.v2 = np.asarray(v2, dtype=np.float64).reshape(-1, 3)
        n = len(self.v0)
        self.order = np.arange(n)
        # node arrays: bounds, children (-1 = leaf), leaf triangle span
        self.node_min = []
        self.node_max = []
        self.node_left = []
        self.node_right = []
        self.node_start = []
        self.node_count = []
        if n:
            lo = np.minimum(np.minimum(self.v0, self.v1), self.v2)
            hi = np.maximum(np.maximum(self.v0, self.v1), self.v2)
            centroids = (lo + hi) / 2.0
            self._build(lo, hi, centroids, 0, n)
            for name in ("node_min", "node_max"):
                setattr(self, name, np.asarray(getattr(self, name)))
            for name in ("node_left", "node_right", "node_start", "node_count"):
                setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64))
            self.v0 = self.v0[self.order]
            self.v1 = self.v1[self.order]
            self.v2 = self.v2[self.order]

    def _build(self, lo, hi, centroids, start, end):
        idx = self.order[start:end]
        node = len(self.node_min)
        # pad bounds so slab culling is never tighter than the triangle-test tolerance
        pad = 1e-9
        self.node_min.append(lo[idx].min(axis=0) - pad)
        self.node_max.append(hi[idx].max(axis=0) + pad)
        self.node_left.append(-1)
        self.node_right.append(-1)
        self.node_start.append(start)
        self.node_count.append(end - start)
        if end - start <= _LEAF_SIZE:
            return node
        c = centroids[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        mid = (end - start) // 2
        part = np.argpartition(c[:, axis], mid)
        self.order[start:end] = idx[part]
        self.node_left[node] = self._build(lo, hi, centroids, start, start + mid)
        self.node_right[node] = self._build(lo, hi, centroids, start + mid, end)
        self.node_count[node] = 0
        return node

    def raycast(self, origin, direction, max_t=np.inf):
        """Nearest hit along the ray.

        Returns (triangle_index_in_original_order, t, u, v) or None.
        """
        if not len(self.v0):
            return None
        origin = np.asarray(origin, dtype=np.float64)
        direction = np.asarray(direction, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inv_d = 1.0 / np.where(direction == 0.0, 1e-300, direction)

        best = (None, max_t, 0.0, 0.0)
        stack = [0]
        while stack:
            node = stack.pop()
            with np.errstate(invalid="ignore", over="ignore"):
                t0 = (self.node_min[node] - origin) * inv_d
                t1 = (self.node_max[node] - origin) * inv_d
            tnear = np.minimum(t0, t1).max()
            tfar = np.maximum(t0, t1).min()
            if tnear > tfar or tfar < 0 or tnear > best[1]:
                continue
            count = self.node_count[node]
            if count:
                s = self.node_start[node]
                t, u, v = intersect_triangles(
                    origin, direction, self.v0[s:s + count], self.v1[s:s + count], self.v2[s:s + count]
                )
                k = int(np.argmin(t))
                if t[k] < best[1]:
                    best = (int(self.order[s + k]), float(t[k]), float(u[k]), float(v[k]))
            else:
                stack.append(self.node_left[node])
                stack.append(self.node_right[node])
        if best[0] is None:
            return None
        return best

    def occluded(self, p_from, p_to):
        """True when any triangle blocks the open segment between the points.

        Endpoints are pulled in by RAY_EPSILON to avoid self-intersection.
        """
        d = np.asarray(p_to, dtype=np.float64) - np.asarray(p_from, dtype=np.float64)
        length = np.linalg.norm(d)
        if length <= 2 * RAY_EPSILON:
            return False
        direction = d / length
        origin = np.asarray(p_from, dtype=np.float64) + direction * RAY_EPSILON
        hit = self.raycast(origin, direction, max_t=length - 2 * RAY_EPSILON)
        return hit is not None


def brute_force_raycast(origin, direction, v0, v1, v2, max_t=np.inf):
    """All-triangle scan; reference oracle for the BVH."""
    if not len(v0):
        return None
    t, u, v = intersect_triangles(
        np.asarray(origin, dtype=np.float64), np.asarray(direction, dtype=np.float64),
        np.asarray(v0, dtype=np.float64), np.asarray(v1, dtype=np.float64),
        np.asarray(v2, dtype=np.float64),
    )
    k = int(np.argmin(t))
    if t[k] >= max_t or not np.isfinite(t[k]):
        return None
    return k, float(t[k]), float(u[k]), float(v[k])
