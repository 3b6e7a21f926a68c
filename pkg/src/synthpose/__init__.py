"""Synthetic human keypoint dataset toolkit.

Generates parametric 3D scenes of posed human figures, labels them with
COCO-style boxes and keypoints via exact geometry (no rendering), and
provides the surrounding workflow: label-distribution adaptation against a
reference dataset, dataset statistics and pose heatmaps, and a plateau
annealing scheduler for downstream training loops.
"""

__version__ = "0.1.0"

from synthpose.adapt import (
    AdaptationProfile,
    AreaRanges,
    NoKeypointAnnotationsError,
    adapt,
    adapt_boxes,
    adapt_keypoints,
    compute_profile,
)
from synthpose.anneal import (
    AnnealingConfig,
    AnnealingState,
    Decision,
    simulate,
    warmup_lr,
)
from synthpose.coco import (
    AnnotatedDataset,
    COCO_KEYPOINT_NAMES,
    COCO_SKELETON,
    ImageRecord,
    KeypointSchema,
    MalformedFileError,
    NUM_KEYPOINTS,
    PersonAnnotation,
    SchemaViolationError,
    parse_dataset,
    write_dataset,
)
from synthpose.labeler import (
    keypoint_visibility,
    label_frame,
    silhouette_bbox,
    visible_bbox,
)
from synthpose.poses import PoseLibrary, load_default_library
from synthpose.randomize import (
    InvalidConfigError,
    ParamRange,
    RandomizerConfig,
    UnknownPresetError,
    generate_scene,
    preset,
)
from synthpose.scene import (
    LightingMeta,
    OccluderPrimitive,
    OrbitCamera,
    SceneDescription,
    SkeletonPose,
)
from synthpose.stats import (
    PoseHeatmapGrid,
    align_skeleton,
    dataset_statistics,
    pose_heatmaps,
)

__all__ = [
    "__version__",
    "AdaptationProfile",
    "AreaRanges",
    "NoKeypointAnnotationsError",
    "adapt",
    "adapt_boxes",
    "adapt_keypoints",
    "compute_profile",
    "AnnealingConfig",
    "AnnealingState",
    "Decision",
    "simulate",
    "warmup_lr",
    "AnnotatedDataset",
    "COCO_KEYPOINT_NAMES",
    "COCO_SKELETON",
    "ImageRecord",
    "KeypointSchema",
    "MalformedFileError",
    "NUM_KEYPOINTS",
    "PersonAnnotation",
    "SchemaViolationError",
    "parse_dataset",
    "write_dataset",
    "keypoint_visibility",
    "label_frame",
    "silhouette_bbox",
    "visible_bbox",
    "PoseLibrary",
    "load_default_library",
    "InvalidConfigError",
    "ParamRange",
    "RandomizerConfig",
    "UnknownPresetError",
    "generate_scene",
    "preset",
    "LightingMeta",
    "OccluderPrimitive",
    "OrbitCamera",
    "SceneDescription",
    "SkeletonPose",
    "PoseHeatmapGrid",
    "align_skeleton",
    "dataset_statistics",
    "pose_heatmaps",
]
