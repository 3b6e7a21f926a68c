"""Pinhole projection for the orbit camera.

Intrinsics are derived from the vertical field of view: ``fy`` is
``height / (2 tan(fov / 2))``, ``fx`` equals ``fy`` (square pixels), and the
principal point is the image center.  A world point is mapped into the
camera frame as ``q = R^T (p - position)``; the positive view depth is
``-q_z`` because the camera looks along its local -z axis, and the pixel is
``u = fx * q_x / depth + cx``, ``v = fy * q_y / depth + cy``.
"""

import math
from dataclasses import dataclass

import numpy as np

from synthpose.scene import OrbitCamera, camera_pose

# Points with view depth at or below this are behind the camera.
BEHIND_EPS = 1e-6


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float


def intrinsics_for(cam: OrbitCamera) -> Intrinsics:
    fy = cam.image_height / (2.0 * math.tan(cam.vertical_fov / 2.0))
    return Intrinsics(fx=fy, fy=fy, cx=cam.image_width / 2.0,
                      cy=cam.image_height / 2.0)


def project_point(point, position, rotation, intr: Intrinsics):
    """Project one world point; returns (u, v, depth) or None when the view
    depth is <= 1e-6 (point behind the camera)."""
    p = np.asarray(point, dtype=np.float64)
    q = rotation.T @ (p - position)
    depth = -q[2]
    if depth <= BEHIND_EPS:
        return None
    u = intr.fx * q[0] / depth + intr.cx
    v = intr.fy * q[1] / depth + intr.cy
    return float(u), float(v), float(depth)


def project_points(points, position, rotation, intr: Intrinsics):
    """Vectorized projection of an (n, 3) array.

    Returns ``(uv, depth)`` where ``uv`` is (n, 2) and ``depth`` is (n,);
    rows with ``depth <= 1e-6`` hold NaN pixel coordinates.
    """
    pts = np.asarray(points, dtype=np.float64)
    q = (pts - position) @ rotation
    depth = -q[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.fx * q[:, 0] / depth + intr.cx
        v = intr.fy * q[:, 1] / depth + intr.cy
    bad = depth <= BEHIND_EPS
    u = np.where(bad, np.nan, u)
    v = np.where(bad, np.nan, v)
    return np.column_stack([u, v]), depth


def camera_frame(cam: OrbitCamera):
    """Convenience bundle: (position, rotation, intrinsics)."""
    position, rotation = camera_pose(cam)
    return position, rotation, intrinsics_for(cam)
