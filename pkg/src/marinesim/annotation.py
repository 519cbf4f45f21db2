"""Ground-truth annotation from render buffers: boxes, masks, labeled point clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics
from .scene import RenderBuffers


@dataclass(frozen=True)
class YoloBox:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box must have positive extent")
        for lo, hi in ((self.cx - self.w / 2, self.cx + self.w / 2),
                       (self.cy - self.h / 2, self.cy + self.h / 2)):
            if lo < -1e-9 or hi > 1 + 1e-9:
                raise ValueError("box must lie inside the unit square")


@dataclass(frozen=True)
class SegmentationMasks:
    semantic: np.ndarray
    instance: np.ndarray
    panoptic: np.ndarray  # (H, W, 2) pairs of (class_id, instance_id)


@dataclass(frozen=True)
class LabeledPointCloud:
    points: np.ndarray       # (N, 3) camera-frame meters
    class_ids: np.ndarray    # (N,)
    instance_ids: np.ndarray  # (N,)


def bounding_boxes(buffers: RenderBuffers, min_area_px=1):
    """Tight normalized boxes per visible instance, pixel-footprint convention.

    A mask spanning pixel columns [min_x, max_x] has width (max_x - min_x + 1)/W.
    Ordered by instance id.
    """
    W, H = buffers.width, buffers.height
    boxes = []
    for inst in sorted(np.unique(buffers.instance_id)):
        if inst == 0:
            continue
        mask = buffers.instance_id == inst
        if mask.sum() < min_area_px:
            continue
        rows, cols = np.nonzero(mask)
        min_x, max_x = cols.min(), cols.max()
        min_y, max_y = rows.min(), rows.max()
        class_id = int(buffers.class_id[rows[0], cols[0]])
        boxes.append(
            YoloBox(
                class_id=class_id,
                cx=(min_x + max_x + 1) / (2.0 * W),
                cy=(min_y + max_y + 1) / (2.0 * H),
                w=(max_x - min_x + 1) / W,
                h=(max_y - min_y + 1) / H,
            )
        )
    return boxes


def segmentation(buffers: RenderBuffers) -> SegmentationMasks:
    """Semantic, instance and panoptic planes straight from the id buffers."""
    semantic = buffers.class_id.copy()
    instance = buffers.instance_id.copy()
    return SegmentationMasks(semantic, instance, np.stack([semantic, instance], axis=-1))


def point_cloud(buffers: RenderBuffers, intr: CameraIntrinsics) -> LabeledPointCloud:
    """Back-project valid-depth pixels through the pinhole model, keeping labels."""
    px, py = intr.principal_point
    valid = np.isfinite(buffers.depth) & (buffers.instance_id > 0)
    rows, cols = np.nonzero(valid)
    z = buffers.depth[rows, cols]
    x = (cols - px) * z / intr.focal_length
    y = (rows - py) * z / intr.focal_length
    return LabeledPointCloud(
        points=np.stack([x, y, z], axis=-1),
        class_ids=buffers.class_id[rows, cols].copy(),
        instance_ids=buffers.instance_id[rows, cols].copy(),
    )


def write_yolo_labels(path, boxes):
    """One `class cx cy w h` line per box, 6 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        for b in boxes:
            fh.write(f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n")


def write_class_names(path, names_by_id):
    """Sidecar file: one class name per line, indexed by id."""
    max_id = max(names_by_id) if names_by_id else -1
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(max_id + 1):
            fh.write(names_by_id.get(i, f"class_{i}") + "\n")


def write_point_cloud(path, cloud: LabeledPointCloud):
    """ASCII rows: x y z class_id instance_id."""
    with open(path, "w", encoding="utf-8") as fh:
        for p, c, i in zip(cloud.points, cloud.class_ids, cloud.instance_ids):
            fh.write(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {int(c)} {int(i)}\n")
