"""Scene description types: posed humans, occluder primitives, orbit camera.

All geometry lives in a right-handed world frame with +y up, distances in
meters and angles in radians.  The camera frame follows the look-at
convention: the camera looks along its local -z axis, +x is image-right and
the image origin is the top-left corner with +v pointing down.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from synthpose.coco import NUM_KEYPOINTS


class DegenerateUpError(ValueError):
    """Raised when the view axis is numerically parallel to world up."""


@dataclass(frozen=True, eq=False)
class SkeletonPose:
    """A posed human: 17 world-space joints plus capsule body proxies.

    ``bone_capsules`` holds ``(joint_a, joint_b, radius)`` triplets; the
    capsule is the set of points within ``radius`` of the segment between the
    two joints.  Endpoints are distinct joints, so every keypoint lies on the
    axis of its incident capsules.
    """

    joints: np.ndarray  # (17, 3) float64
    bone_capsules: tuple  # ((a, b, radius), ...)
    pose_id: str = ""

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=np.float64)
        if joints.shape != (NUM_KEYPOINTS, 3):
            raise ValueError(f"joints must have shape (17, 3), got {joints.shape}")
        if not np.all(np.isfinite(joints)):
            raise ValueError("joints must be finite")
        object.__setattr__(self, "joints", joints)
        for a, b, r in self.bone_capsules:
            if a == b:
                raise ValueError(f"capsule endpoints must be distinct joints, got {a}")
            if not (0 <= a < NUM_KEYPOINTS and 0 <= b < NUM_KEYPOINTS):
                raise ValueError(f"capsule endpoint ({a}, {b}) out of range")
            if not r > 0:
                raise ValueError(f"capsule radius must be positive, got {r}")

    def mid_hip(self) -> np.ndarray:
        return 0.5 * (self.joints[11] + self.joints[12])


@dataclass(frozen=True)
class OccluderPrimitive:
    """A solid occluder: sphere, capsule, or box.

    ``size`` depends on the shape: sphere ``(radius,)``, capsule
    ``(radius, half_length)``, box ``(hx, hy, hz)`` half extents.  ``yaw``
    rotates the primitive about world up; ``pitch`` additionally tilts a
    capsule's axis away from vertical.  Spheres ignore both angles and boxes
    ignore pitch (boxes stay upright).
    """

    shape: str
    center: tuple
    yaw: float = 0.0
    pitch: float = 0.0
    size: tuple = ()
    texture_id: int = 0

    _SIZE_ARITY = {"sphere": 1, "capsule": 2, "box": 3}

    def __post_init__(self):
        if self.shape not in self._SIZE_ARITY:
            raise ValueError(f"unknown occluder shape {self.shape!r}")
        if len(self.center) != 3:
            raise ValueError("center must have 3 entries")
        if len(self.size) != self._SIZE_ARITY[self.shape]:
            raise ValueError(
                f"{self.shape} size needs {self._SIZE_ARITY[self.shape]} "
                f"entries, got {len(self.size)}"
            )
        for v in self.size:
            if not v > 0:
                raise ValueError(f"size entries must be positive, got {self.size!r}")

    def capsule_axis(self) -> np.ndarray:
        """Unit axis direction for a capsule (yaw about +y applied to a
        pitch-tilted vertical axis)."""
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        # start from +y, tilt by pitch toward +z, then yaw about +y
        ax, ay, az = 0.0, cp, sp
        return np.array([ax * cy + az * sy, ay, -ax * sy + az * cy])

    def capsule_endpoints(self) -> tuple:
        radius, half_len = self.size
        axis = self.capsule_axis()
        c = np.asarray(self.center, dtype=np.float64)
        return c - half_len * axis, c + half_len * axis, radius

    def box_rotation(self) -> np.ndarray:
        """World-to-local rotation for a box (inverse yaw about +y)."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        local_to_world = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
        return local_to_world.T


@dataclass(frozen=True)
class OrbitCamera:
    """Pinhole camera on an orbit around a target point.

    ``azimuth`` rotates about world up, ``elevation`` lifts the camera above
    the target plane (must stay strictly inside (-pi/2, pi/2)), and
    ``vertical_fov`` is the full vertical field of view in radians.
    """

    target: tuple = (0.0, 0.0, 0.0)
    radius: float = 5.0
    azimuth: float = 0.0
    elevation: float = 0.0
    vertical_fov: float = math.radians(50.0)
    image_width: int = 640
    image_height: int = 480

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not -math.pi / 2 < self.elevation < math.pi / 2:
            raise ValueError(
                f"elevation must lie strictly inside (-pi/2, pi/2), "
                f"got {self.elevation}"
            )
        if not 0 < self.vertical_fov < math.pi:
            raise ValueError(f"vertical_fov must lie in (0, pi), got "
                             f"{self.vertical_fov}")
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be >= 1")


@dataclass(frozen=True)
class LightingMeta:
    """Lighting parameters recorded per frame; no geometric effect."""

    intensity: float = 1.0
    sun_time_of_day: float = 12.0
    sun_day_of_year: int = 180


@dataclass(frozen=True, eq=False)
class SceneDescription:
    """One frame's full parametric state: humans, occluders, camera, light."""

    frame_index: int
    frame_seed: int
    humans: tuple  # SkeletonPose
    occluders: tuple  # OccluderPrimitive
    camera: OrbitCamera
    lighting_meta: LightingMeta = field(default_factory=LightingMeta)
    background_hdri_id: int = 0

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be >= 0")
        if self.background_hdri_id < 0:
            raise ValueError("background_hdri_id must be >= 0")


def camera_pose(cam: OrbitCamera) -> tuple:
    """World position and camera-to-world rotation for an orbit camera.

    The position is ``target + radius * (cos e sin a, sin e, cos e cos a)``;
    the rotation columns are the camera's x (image right), y, and z axes in
    world coordinates, built look-at style against world up ``(0, 1, 0)``.
    The camera looks along its -z axis toward the target.

    Raises DegenerateUpError when the view axis is within 1e-9 of parallel
    to world up.
    """
    ce = math.cos(cam.elevation)
    se = math.sin(cam.elevation)
    sa = math.sin(cam.azimuth)
    ca = math.cos(cam.azimuth)
    target = np.asarray(cam.target, dtype=np.float64)
    offset = np.array([ce * sa, se, ce * ca])
    position = target + cam.radius * offset

    forward = target - position
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    norm = np.linalg.norm(right)
    if norm < 1e-9:
        raise DegenerateUpError(
            "view axis is parallel to world up; camera roll is undefined"
        )
    right = right / norm
    cam_up = np.cross(right, forward)
    rotation = np.column_stack([right, cam_up, -forward])
    return position, rotation
