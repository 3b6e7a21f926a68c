"""Geometric ground-truth labeling: keypoint visibility and silhouette boxes.

Visibility follows the COCO convention: ``v=0`` when the joint projects
behind the camera or outside the image rectangle, ``v=1`` when the open
segment from the camera to the joint passes through any solid (occluder
primitives, other humans' capsules, or the owner's capsules not incident to
the joint), and ``v=2`` otherwise.  The incident-capsule exclusion avoids
spurious epsilon-scale hits: keypoints sit exactly on those capsules' axes.

The default person box is the amodal-within-frame silhouette box: the union
of the exact pixel extents of K spheres sampled uniformly along each capsule
axis, clipped to the image.  Occlusion does not shrink it.  A visible-only
box mode exists, computed by sampling capsule surface points and keeping the
unoccluded ones.
"""

import math
from dataclasses import dataclass

import numpy as np

from synthpose import kernels
from synthpose.coco import NUM_KEYPOINTS, ImageRecord, PersonAnnotation
from synthpose.projection import BEHIND_EPS, Intrinsics, camera_frame, project_point
from synthpose.scene import SceneDescription, SkeletonPose

# Open-segment clearance for occlusion rays.
SEGMENT_EPS = 1e-6

# Default number of spheres sampled along each capsule axis for boxes.
DEFAULT_SPHERES_PER_CAPSULE = 64


@dataclass(eq=False)
class PackedScene:
    """Scene primitives flattened into kernel-ready arrays."""

    spheres: np.ndarray  # (ns, 4)
    capsules: np.ndarray  # (nc, 7)
    caps_owner: np.ndarray  # (nc,) int64
    caps_joints: np.ndarray  # (nc, 2) int64
    boxes: np.ndarray  # (nb, 15)


def pack_scene(scene: SceneDescription) -> PackedScene:
    spheres = []
    capsules = []
    caps_owner = []
    caps_joints = []
    boxes = []
    for occ in scene.occluders:
        if occ.shape == "sphere":
            spheres.append([*occ.center, occ.size[0]])
        elif occ.shape == "capsule":
            a, b, r = occ.capsule_endpoints()
            capsules.append([*a, *b, r])
            caps_owner.append(-1)
            caps_joints.append((-1, -1))
        else:
            rot = occ.box_rotation()
            boxes.append([*occ.center, *rot.ravel(), *occ.size])
    for h, human in enumerate(scene.humans):
        joints = human.joints
        for a, b, r in human.bone_capsules:
            capsules.append([*joints[a], *joints[b], r])
            caps_owner.append(h)
            caps_joints.append((a, b))
    return PackedScene(
        spheres=np.asarray(spheres, dtype=np.float64).reshape(-1, 4),
        capsules=np.asarray(capsules, dtype=np.float64).reshape(-1, 7),
        caps_owner=np.asarray(caps_owner, dtype=np.int64),
        caps_joints=np.asarray(caps_joints, dtype=np.int64).reshape(-1, 2),
        boxes=np.asarray(boxes, dtype=np.float64).reshape(-1, 15),
    )


def _visibility_of(packed: PackedScene, position, rotation, intr: Intrinsics,
                   width: int, height: int, joints: np.ndarray,
                   owner: int) -> list:
    """Visibility flag plus pixel coordinates for each of the 17 joints."""
    out = []
    px, py, pz = (float(position[0]), float(position[1]), float(position[2]))
    for j in range(NUM_KEYPOINTS):
        proj = project_point(joints[j], position, rotation, intr)
        if proj is None:
            out.append((0.0, 0.0, 0))
            continue
        u, v, _ = proj
        if not (0.0 <= u <= width and 0.0 <= v <= height):
            out.append((0.0, 0.0, 0))
            continue
        blocked = kernels.segment_blocked(
            px, py, pz,
            float(joints[j, 0]), float(joints[j, 1]), float(joints[j, 2]),
            SEGMENT_EPS, 1.0 - SEGMENT_EPS,
            packed.spheres, packed.capsules, packed.caps_owner,
            packed.caps_joints, packed.boxes, owner, j,
        )
        out.append((u, v, 1 if blocked else 2))
    return out


def keypoint_visibility(scene: SceneDescription, owner: int, joint: int) -> int:
    """COCO visibility flag for one joint of one human.

    Raises IndexError for an owner or joint index outside the scene.
    """
    if not 0 <= owner < len(scene.humans):
        raise IndexError(f"human index {owner} out of range")
    if not 0 <= joint < NUM_KEYPOINTS:
        raise IndexError(f"joint index {joint} out of range")
    packed = pack_scene(scene)
    position, rotation, intr = camera_frame(scene.camera)
    width = scene.camera.image_width
    height = scene.camera.image_height
    flags = _visibility_of(packed, position, rotation, intr, width, height,
                           scene.humans[owner].joints, owner)
    return flags[joint][2]


def _capsules_in_view(human: SkeletonPose, position, rotation) -> np.ndarray:
    """Capsule endpoints mapped to view coordinates (+z is view depth)."""
    n = len(human.bone_capsules)
    out = np.empty((n, 7))
    joints_cam = (human.joints - position) @ rotation
    for i, (a, b, r) in enumerate(human.bone_capsules):
        qa = joints_cam[a]
        qb = joints_cam[b]
        out[i, 0] = qa[0]
        out[i, 1] = qa[1]
        out[i, 2] = -qa[2]
        out[i, 3] = qb[0]
        out[i, 4] = qb[1]
        out[i, 5] = -qb[2]
        out[i, 6] = r
    return out


def silhouette_bbox(human: SkeletonPose, camera, *,
                    k_spheres: int = DEFAULT_SPHERES_PER_CAPSULE):
    """Amodal-within-frame silhouette box ``(x, y, w, h)`` or None.

    None means the human is entirely behind the camera or projects outside
    the image rectangle.
    """
    position, rotation, intr = camera_frame(camera)
    return _silhouette_bbox_packed(
        _capsules_in_view(human, position, rotation), intr,
        camera.image_width, camera.image_height, k_spheres,
    )


def _silhouette_bbox_packed(caps_view, intr: Intrinsics, width, height,
                            k_spheres):
    has_any, ulo, uhi, vlo, vhi = kernels.capsule_union_extents(
        caps_view, k_spheres, intr.fx, intr.fy, intr.cx, intr.cy,
        int(width), int(height),
    )
    if not has_any:
        return None
    x0 = max(0.0, ulo)
    y0 = max(0.0, vlo)
    x1 = min(float(width), uhi)
    y1 = min(float(height), vhi)
    if not (x1 > x0 and y1 > y0):
        return None
    return x0, y0, x1 - x0, y1 - y0


def sample_capsule_surface(a, b, radius: float, n: int) -> np.ndarray:
    """Deterministic quasi-uniform grid of ``>= n`` points on a capsule.

    Covers the cylindrical side plus both hemispherical caps with structured
    (axis, angle) grids; used by the visible-only box mode.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    axis = b - a
    length = np.linalg.norm(axis)
    if length < 1e-12:
        axis_dir = np.array([0.0, 1.0, 0.0])
    else:
        axis_dir = axis / length
    # orthonormal frame around the axis
    helper = np.array([1.0, 0.0, 0.0])
    if abs(axis_dir[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    n1 = np.cross(axis_dir, helper)
    n1 /= np.linalg.norm(n1)
    n2 = np.cross(axis_dir, n1)

    n_theta = max(8, int(round(math.sqrt(n / 2))))
    n_axial = max(4, int(math.ceil(n / (2 * n_theta))))
    thetas = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    ring = np.cos(thetas)[:, None] * n1 + np.sin(thetas)[:, None] * n2

    pts = []
    for s in np.linspace(0.0, 1.0, n_axial):
        center = a + s * axis
        pts.append(center + radius * ring)
    n_phi = max(3, n_axial // 2)
    for phi in np.linspace(0.0, math.pi / 2, n_phi + 1)[1:]:
        cp = math.cos(phi) * radius
        sp = math.sin(phi) * radius
        pts.append(a - sp * axis_dir + cp * ring)
        pts.append(b + sp * axis_dir + cp * ring)
    pts.append((a - radius * axis_dir)[None, :])
    pts.append((b + radius * axis_dir)[None, :])
    return np.concatenate(pts, axis=0)


def visible_bbox(scene: SceneDescription, owner: int, *,
                 samples_per_capsule: int = 600):
    """Visible-region box: bounds of unoccluded surface sample points.

    Slower sampling-based mode; the occlusion test for a surface point uses
    the same segment predicate as keypoint visibility, against every
    primitive including the owner's own capsules.
    """
    if not 0 <= owner < len(scene.humans):
        raise IndexError(f"human index {owner} out of range")
    packed = pack_scene(scene)
    position, rotation, intr = camera_frame(scene.camera)
    width = float(scene.camera.image_width)
    height = float(scene.camera.image_height)
    human = scene.humans[owner]
    px, py, pz = (float(position[0]), float(position[1]), float(position[2]))

    ulo = vlo = math.inf
    uhi = vhi = -math.inf
    found = False
    joints = human.joints
    for a, b, r in human.bone_capsules:
        pts = sample_capsule_surface(joints[a], joints[b], r,
                                     samples_per_capsule)
        for p in pts:
            proj = project_point(p, position, rotation, intr)
            if proj is None:
                continue
            u, v, _ = proj
            if not (0.0 <= u <= width and 0.0 <= v <= height):
                continue
            blocked = kernels.segment_blocked(
                px, py, pz, float(p[0]), float(p[1]), float(p[2]),
                SEGMENT_EPS, 1.0 - SEGMENT_EPS,
                packed.spheres, packed.capsules, packed.caps_owner,
                packed.caps_joints, packed.boxes, -2, -2,
            )
            if blocked:
                continue
            found = True
            ulo = min(ulo, u)
            uhi = max(uhi, u)
            vlo = min(vlo, v)
            vhi = max(vhi, v)
    if not found or not (uhi > ulo and vhi > vlo):
        return None
    return ulo, vlo, uhi - ulo, vhi - vlo


def label_frame(scene: SceneDescription, image_id: int, *,
                first_annotation_id: int = 1,
                box_mode: str = "full",
                k_spheres: int = DEFAULT_SPHERES_PER_CAPSULE,
                file_name: str | None = None):
    """Produce the image record and person annotations for one scene.

    Annotations are ordered by human index; humans whose box is None are
    skipped.  ``box_mode`` is ``full`` (amodal silhouette box, default) or
    ``visible``.
    """
    if box_mode not in ("full", "visible"):
        raise ValueError(f"box_mode must be 'full' or 'visible', got {box_mode!r}")
    camera = scene.camera
    position, rotation, intr = camera_frame(camera)
    width = camera.image_width
    height = camera.image_height
    packed = pack_scene(scene)
    if file_name is None:
        file_name = f"frame_{scene.frame_index:06d}.png"
    image = ImageRecord(id=image_id, width=width, height=height,
                        file_name=file_name)

    annotations = []
    next_id = first_annotation_id
    for h, human in enumerate(scene.humans):
        if box_mode == "full":
            box = _silhouette_bbox_packed(
                _capsules_in_view(human, position, rotation), intr,
                width, height, k_spheres,
            )
        else:
            box = visible_bbox(scene, h)
        if box is None:
            continue
        flags = _visibility_of(packed, position, rotation, intr, width,
                               height, human.joints, h)
        triplets = []
        labeled = 0
        for u, v, flag in flags:
            if flag == 0:
                triplets.append((0.0, 0.0, 0))
            else:
                triplets.append((u, v, flag))
                labeled += 1
        x, y, w, hgt = box
        annotations.append(PersonAnnotation(
            id=next_id,
            image_id=image_id,
            bbox=(x, y, w, hgt),
            area=w * hgt,
            keypoints=tuple(triplets),
            num_keypoints=labeled,
            iscrowd=0,
            category_id=1,
        ))
        next_id += 1
    return image, annotations
