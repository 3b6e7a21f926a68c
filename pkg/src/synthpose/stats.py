"""Dataset statistics: pose-space heatmaps and per-keypoint label rates.

The heatmaps histogram keypoint positions in a normalized, person-centric
frame: each skeleton is translated so the hip midpoint sits at the origin
and scaled so the torso (hip midpoint to shoulder midpoint) has unit
length.  This makes skeletons comparable across subjects, distances, and
image resolutions.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from synthpose.adapt import AreaRanges, DEFAULT_RANGES, NUM_AREA_RANGES
from synthpose.coco import (
    AnnotatedDataset,
    COCO_KEYPOINT_NAMES,
    NUM_KEYPOINTS,
    PersonAnnotation,
)

# COCO keypoint indices used by the normalization gate.
_LEFT_SHOULDER = 5
_RIGHT_SHOULDER = 6
_LEFT_HIP = 11
_RIGHT_HIP = 12

TORSO_EPS = 1e-6

DEFAULT_EXTENT = 3.0
DEFAULT_RESOLUTION = 101


class DegenerateTorsoError(ValueError):
    """Raised when hip and shoulder midpoints coincide (zero torso length)."""


def align_skeleton(ann: PersonAnnotation):
    """Normalize one annotation's keypoints to the person-centric frame.

    Returns ``(coords, labeled)`` where ``coords`` is (17, 2) float64 and
    ``labeled`` a (17,) bool mask, or None when any of the four torso
    keypoints (hips, shoulders) is unlabeled.  Raises DegenerateTorsoError
    when the torso length is below TORSO_EPS.
    """
    kpts = np.asarray(ann.keypoints, dtype=np.float64).reshape(
        NUM_KEYPOINTS, 3)
    gate = (_LEFT_SHOULDER, _RIGHT_SHOULDER, _LEFT_HIP, _RIGHT_HIP)
    if any(kpts[i, 2] <= 0 for i in gate):
        return None
    mid_hip = (kpts[_LEFT_HIP, :2] + kpts[_RIGHT_HIP, :2]) / 2.0
    mid_shoulder = (kpts[_LEFT_SHOULDER, :2] + kpts[_RIGHT_SHOULDER, :2]) / 2.0
    torso = float(np.linalg.norm(mid_shoulder - mid_hip))
    if torso < TORSO_EPS:
        raise DegenerateTorsoError(
            f"torso length {torso} below {TORSO_EPS} for annotation {ann.id}")
    coords = (kpts[:, :2] - mid_hip) / torso
    labeled = kpts[:, 2] > 0
    return coords, labeled


@dataclass
class PoseHeatmapGrid:
    """Per-keypoint 2D histogram over the normalized pose frame.

    Covers [-extent, extent] in both axes with ``resolution`` bins per axis
    (odd, so a center bin exists); points outside the extent are tallied per
    keypoint in ``overflow`` rather than clamped into edge bins.  Counts are
    exact integers so grids from shards merge losslessly.
    """

    extent: float = DEFAULT_EXTENT
    resolution: int = DEFAULT_RESOLUTION
    counts: np.ndarray = field(default=None)
    overflow: np.ndarray = field(default=None)
    instance_count: int = 0

    def __post_init__(self):
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        if self.resolution < 3 or self.resolution % 2 == 0:
            raise ValueError("resolution must be an odd integer >= 3")
        if self.counts is None:
            self.counts = np.zeros(
                (NUM_KEYPOINTS, self.resolution, self.resolution),
                dtype=np.int64)
        if self.overflow is None:
            self.overflow = np.zeros(NUM_KEYPOINTS, dtype=np.int64)

    def bin_of(self, value: float) -> int:
        """Bin index along one axis, or -1 for out-of-extent values."""
        if not -self.extent <= value <= self.extent:
            return -1
        if value == self.extent:
            # The exact upper edge belongs to the last bin, not overflow.
            return self.resolution - 1
        idx = int(np.floor((value + self.extent) / (2.0 * self.extent)
                           * self.resolution))
        return min(idx, self.resolution - 1)

    def add(self, coords: np.ndarray, labeled: np.ndarray) -> None:
        """Accumulate one normalized skeleton."""
        self.instance_count += 1
        for k in range(NUM_KEYPOINTS):
            if not labeled[k]:
                continue
            col = self.bin_of(float(coords[k, 0]))
            row = self.bin_of(float(coords[k, 1]))
            if col < 0 or row < 0:
                self.overflow[k] += 1
            else:
                self.counts[k, row, col] += 1

    def merge(self, other: "PoseHeatmapGrid") -> None:
        """Accumulate another grid in place; grids must share geometry."""
        if (other.extent != self.extent
                or other.resolution != self.resolution):
            raise ValueError("cannot merge grids with different geometry")
        self.counts += other.counts
        self.overflow += other.overflow
        self.instance_count += other.instance_count

    def center_bin(self) -> int:
        return self.resolution // 2

    def total_count(self) -> int:
        return int(self.counts.sum() + self.overflow.sum())


def pose_heatmaps(dataset: AnnotatedDataset, extent: float = DEFAULT_EXTENT,
                  resolution: int = DEFAULT_RESOLUTION) -> PoseHeatmapGrid:
    """Histogram every gated annotation of a dataset."""
    grid = PoseHeatmapGrid(extent=extent, resolution=resolution)
    for ann in dataset.annotations:
        aligned = align_skeleton(ann)
        if aligned is None:
            continue
        coords, labeled = aligned
        grid.add(coords, labeled)
    return grid


def keypoint_rate_table(dataset: AnnotatedDataset,
                        ranges: AreaRanges = DEFAULT_RANGES):
    """Labeling rates per (area bucket, keypoint), plus bucket populations.

    Shares the bucketing and counting definitions with profile computation
    so the two reports can never disagree.
    """
    labeled = np.zeros((NUM_AREA_RANGES, NUM_KEYPOINTS), dtype=np.int64)
    counts = np.zeros(NUM_AREA_RANGES, dtype=np.int64)
    for ann in dataset.annotations:
        r = ranges.index_of(float(ann.area))
        counts[r] += 1
        for k in range(NUM_KEYPOINTS):
            if ann.keypoints[k][2] > 0:
                labeled[r, k] += 1
    rates = np.zeros((NUM_AREA_RANGES, NUM_KEYPOINTS), dtype=np.float64)
    nonzero = counts > 0
    rates[nonzero] = labeled[nonzero] / counts[nonzero, None]
    return rates, counts


def dataset_statistics(dataset: AnnotatedDataset,
                       ranges: AreaRanges = DEFAULT_RANGES) -> dict:
    """Summary statistics for a keypoint dataset.

    Keypoint rates for empty buckets are reported as null rather than a
    made-up number.
    """
    rates, counts = keypoint_rate_table(dataset, ranges)
    rate_rows = []
    for r in range(NUM_AREA_RANGES):
        if counts[r] == 0:
            rate_rows.append(None)
        else:
            rate_rows.append([float(p) for p in rates[r]])

    areas = [float(a.area) for a in dataset.annotations]
    aspects = [a.bbox[2] / a.bbox[3] for a in dataset.annotations]
    num_labeled = [a.num_keypoints for a in dataset.annotations]

    per_image = {img.id: 0 for img in dataset.images}
    for ann in dataset.annotations:
        per_image[ann.image_id] += 1
    box_histogram: dict = {}
    for n in per_image.values():
        box_histogram[n] = box_histogram.get(n, 0) + 1

    def _summary(values):
        if not values:
            return None
        return {
            "min": float(min(values)),
            "max": float(max(values)),
            "mean": float(np.mean(values)),
        }

    return {
        "images": len(dataset.images),
        "annotations": len(dataset.annotations),
        "area_range_starts": list(ranges.starts),
        "annotations_per_range": [int(n) for n in counts],
        "keypoint_rates": rate_rows,
        "box_area": _summary(areas),
        "box_aspect": _summary(aspects),
        "boxes_per_image": [[n, box_histogram[n]]
                            for n in sorted(box_histogram)],
        "mean_labeled_keypoints":
            float(np.mean(num_labeled)) if num_labeled else None,
    }


def rates_csv(dataset: AnnotatedDataset,
              ranges: AreaRanges = DEFAULT_RANGES) -> str:
    """Keypoint rate table as CSV (one row per area bucket)."""
    rates, counts = keypoint_rate_table(dataset, ranges)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["range_start", "boxes"] + list(COCO_KEYPOINT_NAMES))
    for r in range(NUM_AREA_RANGES):
        writer.writerow(
            [ranges.starts[r], int(counts[r])]
            + [f"{rates[r, k]:.6f}" for k in range(NUM_KEYPOINTS)])
    return buf.getvalue()


def heatmap_csv(grid: PoseHeatmapGrid, keypoint: int) -> str:
    """One keypoint's heatmap as CSV rows of counts."""
    if not 0 <= keypoint < NUM_KEYPOINTS:
        raise IndexError(f"keypoint index {keypoint} out of range")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in grid.counts[keypoint]:
        writer.writerow([int(c) for c in row])
    return buf.getvalue()


def heatmap_summary_obj(grid: PoseHeatmapGrid) -> dict:
    """JSON-ready summary of a heatmap grid."""
    return {
        "extent": grid.extent,
        "resolution": grid.resolution,
        "instance_count": grid.instance_count,
        "keypoint_names": list(COCO_KEYPOINT_NAMES),
        "in_grid_counts": [int(grid.counts[k].sum())
                           for k in range(NUM_KEYPOINTS)],
        "overflow_counts": [int(o) for o in grid.overflow],
    }
