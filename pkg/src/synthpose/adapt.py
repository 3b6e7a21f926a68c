"""Label-distribution adaptation between datasets.

Aligns a synthetic dataset's annotation statistics with a reference dataset
by (a) dropping boxes whose pixel area falls below the reference's observed
minimums and (b) thinning per-keypoint label counts, bucketed by box area,
down to the reference's labeling rates.  Removal is one-sided: labels are
only ever dropped, never invented, so running the same adaptation twice is
a no-op.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from synthpose.coco import (
    AnnotatedDataset,
    MalformedFileError,
    NUM_KEYPOINTS,
    PersonAnnotation,
    VISIBILITY_ABSENT,
    dumps_canonical,
)
from synthpose.randomize import mix

ADAPT_MODES = ("box", "box+kpt")

# Conventional six box-area buckets (32^2, 64^2, 96^2, 128^2, 256^2 pixels).
DEFAULT_RANGE_STARTS = (0.0, 1024.0, 4096.0, 9216.0, 16384.0, 65536.0)
NUM_AREA_RANGES = 6


class NoKeypointAnnotationsError(ValueError):
    """Raised when a reference dataset has no keypoint-annotated boxes."""


@dataclass(frozen=True)
class AreaRanges:
    """Six contiguous half-open box-area buckets covering [0, inf).

    ``starts[i]`` is the inclusive lower edge of bucket i; bucket i spans
    [starts[i], starts[i+1]) and the last bucket is unbounded above.
    """

    starts: tuple = DEFAULT_RANGE_STARTS

    def __post_init__(self):
        starts = tuple(float(s) for s in self.starts)
        object.__setattr__(self, "starts", starts)
        if len(starts) != NUM_AREA_RANGES:
            raise ValueError(
                f"exactly {NUM_AREA_RANGES} area ranges required, "
                f"got {len(starts)}")
        if starts[0] != 0.0:
            raise ValueError("first area range must start at 0")
        for a, b in zip(starts, starts[1:]):
            if not b > a:
                raise ValueError("area range starts must be ascending")

    def index_of(self, area: float) -> int:
        """Bucket index for a box area (areas are positive: w, h > 0)."""
        idx = NUM_AREA_RANGES - 1
        while idx > 0 and area < self.starts[idx]:
            idx -= 1
        return idx


DEFAULT_RANGES = AreaRanges()


@dataclass(frozen=True)
class AdaptationProfile:
    """Reference-dataset statistics driving adaptation.

    ``keypoint_rates[r][k]`` is the fraction of the reference boxes in area
    bucket ``r`` whose keypoint ``k`` is labeled (visibility > 0), zero for
    empty buckets.  ``min_area`` is the smallest keypoint-annotated box area
    observed, ``min_area_ratio`` the smallest area / image-area ratio over
    the same boxes.
    """

    min_area: float
    min_area_ratio: float
    keypoint_rates: tuple
    range_counts: tuple
    ranges: AreaRanges = field(default_factory=AreaRanges)

    def __post_init__(self):
        if not self.min_area > 0:
            raise ValueError("min_area must be positive")
        if not 0.0 < self.min_area_ratio < 1.0:
            raise ValueError("min_area_ratio must lie in (0, 1)")
        if len(self.keypoint_rates) != NUM_AREA_RANGES:
            raise ValueError("keypoint_rates must have one row per area range")
        if len(self.range_counts) != NUM_AREA_RANGES:
            raise ValueError("range_counts must have one entry per area range")
        for row in self.keypoint_rates:
            if len(row) != NUM_KEYPOINTS:
                raise ValueError("keypoint_rates rows must cover all keypoints")
            for p in row:
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"keypoint rate {p} outside [0, 1]")

    def to_obj(self) -> dict:
        return {
            "min_area": self.min_area,
            "min_area_ratio": self.min_area_ratio,
            "area_range_starts": list(self.ranges.starts),
            "range_counts": list(self.range_counts),
            "keypoint_rates": [list(row) for row in self.keypoint_rates],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "AdaptationProfile":
        if not isinstance(obj, dict):
            raise MalformedFileError("profile root must be an object")
        for key in ("min_area", "min_area_ratio", "keypoint_rates",
                    "range_counts"):
            if key not in obj:
                raise MalformedFileError(f"profile missing key {key!r}")
        starts = obj.get("area_range_starts", DEFAULT_RANGE_STARTS)
        try:
            return cls(
                min_area=float(obj["min_area"]),
                min_area_ratio=float(obj["min_area_ratio"]),
                keypoint_rates=tuple(tuple(float(p) for p in row)
                                     for row in obj["keypoint_rates"]),
                range_counts=tuple(int(n) for n in obj["range_counts"]),
                ranges=AreaRanges(tuple(float(s) for s in starts)),
            )
        except (TypeError, ValueError) as exc:
            raise MalformedFileError(f"invalid profile: {exc}") from exc


def save_profile(profile: AdaptationProfile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(profile.to_obj(), indent=2))
        fh.write("\n")


def load_profile(path) -> AdaptationProfile:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedFileError(f"profile is not valid JSON: {exc}") from exc
    return AdaptationProfile.from_obj(obj)


def load_ranges(path) -> AreaRanges:
    """Read custom bucket boundaries: a JSON array of six ascending starts."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedFileError(f"ranges file is not valid JSON: {exc}") \
                from exc
    if not isinstance(obj, list):
        raise MalformedFileError("ranges file must hold a JSON array")
    try:
        return AreaRanges(tuple(float(s) for s in obj))
    except (TypeError, ValueError) as exc:
        raise MalformedFileError(f"invalid area ranges: {exc}") from exc


def compute_profile(dataset: AnnotatedDataset,
                    ranges: AreaRanges = DEFAULT_RANGES) -> AdaptationProfile:
    """Measure a reference dataset's labeling statistics.

    The area minimums are taken over keypoint-annotated boxes only
    (num_keypoints > 0); the per-bucket labeling rates count all boxes.
    """
    images = {img.id: img for img in dataset.images}
    min_area = float("inf")
    min_ratio = float("inf")
    has_keypoint_box = False
    labeled = np.zeros((NUM_AREA_RANGES, NUM_KEYPOINTS), dtype=np.int64)
    counts = np.zeros(NUM_AREA_RANGES, dtype=np.int64)
    for ann in dataset.annotations:
        area = float(ann.area)
        r = ranges.index_of(area)
        counts[r] += 1
        for k in range(NUM_KEYPOINTS):
            if ann.keypoints[k][2] > 0:
                labeled[r, k] += 1
        if ann.num_keypoints > 0:
            has_keypoint_box = True
            image = images[ann.image_id]
            min_area = min(min_area, area)
            min_ratio = min(min_ratio, area / (image.width * image.height))
    if not has_keypoint_box:
        raise NoKeypointAnnotationsError(
            "reference dataset has no keypoint-annotated boxes to profile")
    rates = np.zeros((NUM_AREA_RANGES, NUM_KEYPOINTS), dtype=np.float64)
    nonzero = counts > 0
    rates[nonzero] = labeled[nonzero] / counts[nonzero, None]
    return AdaptationProfile(
        min_area=min_area,
        min_area_ratio=min_ratio,
        keypoint_rates=tuple(tuple(float(p) for p in row) for row in rates),
        range_counts=tuple(int(n) for n in counts),
        ranges=ranges,
    )


def adapt_boxes(dataset: AnnotatedDataset,
                profile: AdaptationProfile) -> AnnotatedDataset:
    """Drop annotations smaller than the reference dataset's observed floor.

    A box is kept iff its area is >= the profile's minimum area AND its
    area / image-area ratio is strictly above the profile's minimum ratio.
    Images are retained even if all their annotations are removed; surviving
    annotations keep their ids.
    """
    images = {img.id: img for img in dataset.images}
    kept = []
    for ann in dataset.annotations:
        image = images[ann.image_id]
        ratio = float(ann.area) / (image.width * image.height)
        if float(ann.area) >= profile.min_area and \
                ratio > profile.min_area_ratio:
            kept.append(ann)
    return AnnotatedDataset(
        images=dataset.images,
        annotations=tuple(kept),
        schema=dataset.schema,
        extra=dataset.extra,
    )


def _strip_keypoint(ann: PersonAnnotation, k: int) -> PersonAnnotation:
    kpts = list(ann.keypoints)
    kpts[k] = (0.0, 0.0, VISIBILITY_ABSENT)
    labeled = sum(1 for _, _, v in kpts if v > 0)
    return PersonAnnotation(
        id=ann.id,
        image_id=ann.image_id,
        bbox=ann.bbox,
        area=ann.area,
        keypoints=tuple(kpts),
        num_keypoints=labeled,
        iscrowd=ann.iscrowd,
        category_id=ann.category_id,
        extra=ann.extra,
    )


def keypoint_target(rate: float, n_boxes: int) -> int:
    """Round-half-up target count for one (bucket, keypoint) pair."""
    return int(np.floor(rate * n_boxes + 0.5))


def adapt_keypoints(dataset: AnnotatedDataset, profile: AdaptationProfile,
                    seed: int = 0) -> AnnotatedDataset:
    """Thin keypoint labels down to the reference dataset's rates.

    For each (area bucket, keypoint) pair with N boxes in the bucket, the
    target labeled count is round-half-up(rate * N).  If the dataset has
    more labels than the target, the surplus is unlabeled by a uniform draw
    without replacement from that pair's labeled boxes; if it has fewer,
    nothing changes (labels are never invented).  Box geometry, image set,
    and annotation ids are untouched.  Each pair uses its own seeded stream,
    so results do not depend on bucket iteration order.
    """
    anns = list(dataset.annotations)
    by_range: list = [[] for _ in range(NUM_AREA_RANGES)]
    for idx, ann in enumerate(anns):
        by_range[profile.ranges.index_of(float(ann.area))].append(idx)

    for r in range(NUM_AREA_RANGES):
        members = by_range[r]
        if not members:
            continue
        n_boxes = len(members)
        for k in range(NUM_KEYPOINTS):
            labeled_idx = [i for i in members
                           if anns[i].keypoints[k][2] > 0]
            target = keypoint_target(profile.keypoint_rates[r][k], n_boxes)
            surplus = len(labeled_idx) - target
            if surplus <= 0:
                continue
            rng = np.random.Generator(
                np.random.PCG64(mix(mix(seed, r), k)))
            chosen = rng.choice(len(labeled_idx), size=surplus, replace=False)
            for c in chosen:
                i = labeled_idx[int(c)]
                anns[i] = _strip_keypoint(anns[i], k)

    return AnnotatedDataset(
        images=dataset.images,
        annotations=tuple(anns),
        schema=dataset.schema,
        extra=dataset.extra,
    )


def adapt(dataset: AnnotatedDataset, profile: AdaptationProfile,
          mode: str = "box+kpt", seed: int = 0) -> AnnotatedDataset:
    """Apply box filtering, then (in box+kpt mode) keypoint thinning.

    Keypoint bucket populations are counted after box filtering, so the
    two modes compose rather than commute.
    """
    if mode not in ADAPT_MODES:
        raise ValueError(f"mode {mode!r} not in {ADAPT_MODES}")
    out = adapt_boxes(dataset, profile)
    if mode == "box+kpt":
        out = adapt_keypoints(out, profile, seed=seed)
    return out
