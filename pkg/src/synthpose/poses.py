"""Pose library: stored skeleton poses, instantiation, and perturbation.

The library is a plain JSON document (a versioned fixture ships with the
package) holding named 17-joint poses grouped into families, a shared list of
capsule body proxies, and per-joint perturbation specs used by the diverse
mode.  Stored poses are centered: the mid-hip point is at the local origin.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from synthpose.coco import NUM_KEYPOINTS
from synthpose.scene import SkeletonPose

POSE_MODES = ("simple", "diverse")

# Families available in simple mode; diverse mode uses every stored pose.
SIMPLE_FAMILIES = frozenset({"walk", "run", "idle"})


class UnknownPoseError(KeyError):
    """Requested pose id is not present in the library."""


@dataclass(frozen=True)
class PerturbationSpec:
    """Rigid sub-chain rotation: rotate ``moves`` joints about the centroid
    of ``pivot`` joints by a random angle within ``limit`` radians."""

    pivot: tuple
    moves: tuple
    limit: float

    def __post_init__(self):
        for idx in self.pivot + self.moves:
            if not 0 <= idx < NUM_KEYPOINTS:
                raise ValueError(f"joint index {idx} out of range")
        if self.limit < 0:
            raise ValueError(f"perturbation limit must be >= 0, got {self.limit}")


@dataclass(frozen=True, eq=False)
class PoseLibrary:
    """Named poses plus shared capsules and perturbation limits.

    ``mode`` selects the eligible pose set: ``simple`` restricts sampling to
    the walk/run/idle families and disables perturbation; ``diverse`` uses
    every stored pose and perturbs joints within the stored limits.
    """

    poses: dict  # name -> (joints (17,3), family)
    capsules: tuple  # ((a, b, radius), ...)
    perturbations: tuple  # PerturbationSpec
    mode: str = "diverse"
    version: int = 1

    def __post_init__(self):
        if self.mode not in POSE_MODES:
            raise ValueError(f"mode must be one of {POSE_MODES}, got {self.mode!r}")
        if not self.poses:
            raise ValueError("pose library must contain at least one pose")
        families = {family for _, family in self.poses.values()}
        missing = SIMPLE_FAMILIES - families
        if missing:
            raise ValueError(f"library must provide families {sorted(missing)}")
        for name, (joints, _) in self.poses.items():
            if joints.shape != (NUM_KEYPOINTS, 3):
                raise ValueError(f"pose {name!r} joints have shape {joints.shape}")
            if not np.all(np.isfinite(joints)):
                raise ValueError(f"pose {name!r} has non-finite joints")

    def eligible_pose_ids(self) -> tuple:
        """Pose names the current mode may sample, in stored order."""
        if self.mode == "simple":
            return tuple(n for n, (_, fam) in self.poses.items()
                         if fam in SIMPLE_FAMILIES)
        return tuple(self.poses)

    def joints_of(self, pose_id: str) -> np.ndarray:
        try:
            return self.poses[pose_id][0]
        except KeyError:
            raise UnknownPoseError(pose_id) from None


def _library_from_obj(raw: dict, mode: str) -> PoseLibrary:
    poses = {}
    for name, entry in raw["poses"].items():
        joints = np.asarray(entry["joints"], dtype=np.float64)
        poses[name] = (joints, entry["family"])
    capsules = tuple((int(a), int(b), float(r)) for a, b, r in raw["capsules"])
    perturbations = tuple(
        PerturbationSpec(pivot=tuple(p["pivot"]), moves=tuple(p["moves"]),
                         limit=float(p["limit"]))
        for p in raw.get("perturbations", ())
    )
    return PoseLibrary(poses=poses, capsules=capsules,
                       perturbations=perturbations, mode=mode,
                       version=int(raw.get("version", 1)))


_DEFAULT_RAW = None


def load_default_library(mode: str = "diverse") -> PoseLibrary:
    """Load the pose library fixture shipped with the package."""
    global _DEFAULT_RAW
    if _DEFAULT_RAW is None:
        text = (resources.files("synthpose") / "data" / "pose_library.json").read_text(
            encoding="utf-8"
        )
        _DEFAULT_RAW = json.loads(text)
    return _library_from_obj(_DEFAULT_RAW, mode)


def load_library(path, mode: str = "diverse") -> PoseLibrary:
    with open(path, "r", encoding="utf-8") as fh:
        return _library_from_obj(json.load(fh), mode)


def rotation_about_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    return np.array([
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ])


def transform_joints(joints: np.ndarray, root, heading: float,
                     scale: float) -> np.ndarray:
    """Similarity transform: recenter mid-hip, scale, rotate about world up,
    then translate so mid-hip lands on ``root``."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    joints = np.asarray(joints, dtype=np.float64)
    mid_hip = 0.5 * (joints[11] + joints[12])
    local = (joints - mid_hip) * scale
    rot = rotation_about_y(heading)
    return local @ rot.T + np.asarray(root, dtype=np.float64)


def instantiate_pose(lib: PoseLibrary, pose_id: str, root, heading: float,
                     scale: float) -> SkeletonPose:
    """Place a stored pose in the world.

    The result preserves the stored pose's inter-joint distance ratios
    exactly (the transform is a similarity), with capsule radii scaled by
    the same factor.
    """
    joints = transform_joints(lib.joints_of(pose_id), root, heading, scale)
    capsules = tuple((a, b, r * scale) for a, b, r in lib.capsules)
    return SkeletonPose(joints=joints, bone_capsules=capsules, pose_id=pose_id)


def perturb_joints(joints: np.ndarray, perturbations, rng) -> np.ndarray:
    """Apply one random rigid rotation per perturbation spec.

    Each spec rotates its ``moves`` joints about the centroid of its
    ``pivot`` joints by an angle drawn uniformly from [-limit, limit] about
    a uniformly random axis.  Bone lengths within each rotated sub-chain are
    preserved.  Draws nothing for specs with limit 0.
    """
    out = np.array(joints, dtype=np.float64, copy=True)
    for spec in perturbations:
        if spec.limit == 0:
            continue
        axis = rng.normal(size=3)
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            axis = np.array([0.0, 1.0, 0.0])
        else:
            axis = axis / norm
        angle = rng.uniform(-spec.limit, spec.limit)
        pivot = out[list(spec.pivot)].mean(axis=0)
        rot = rotation_about_axis(axis, angle)
        moved = (out[list(spec.moves)] - pivot) @ rot.T + pivot
        out[list(spec.moves)] = moved
    return out


def build_skeleton(lib: PoseLibrary, pose_id: str, joints_local: np.ndarray,
                   root, heading: float, scale: float) -> SkeletonPose:
    """Assemble a SkeletonPose from (possibly perturbed) local joints."""
    joints = transform_joints(joints_local, root, heading, scale)
    capsules = tuple((a, b, r * scale) for a, b, r in lib.capsules)
    return SkeletonPose(joints=joints, bone_capsules=capsules, pose_id=pose_id)
