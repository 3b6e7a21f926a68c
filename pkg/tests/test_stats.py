"""Torso-normalized pose heatmaps and dataset summary statistics."""

import math

import numpy as np
import pytest

from synthpose.adapt import compute_profile
from synthpose.coco import AnnotatedDataset
from synthpose.stats import (
    DEFAULT_EXTENT,
    DEFAULT_RESOLUTION,
    DegenerateTorsoError,
    PoseHeatmapGrid,
    align_skeleton,
    dataset_statistics,
    heatmap_csv,
    heatmap_summary_obj,
    pose_heatmaps,
    rates_csv,
)

from _fixtures import bbox_for_area, make_annotation, make_dataset

L_SHOULDER, R_SHOULDER, L_HIP, R_HIP = 5, 6, 11, 12
L_WRIST = 9


def _torso_keypoints(*, hip_y=200.0, shoulder_y=150.0, cx=100.0, spread=10.0):
    kpts = [(0.0, 0.0, 0)] * 17
    kpts[L_SHOULDER] = (cx - spread, shoulder_y, 2)
    kpts[R_SHOULDER] = (cx + spread, shoulder_y, 2)
    kpts[L_HIP] = (cx - spread, hip_y, 2)
    kpts[R_HIP] = (cx + spread, hip_y, 2)
    return kpts


def _torso_annotation(extra_points=(), ann_id=1, image_id=1, scale=1.0):
    kpts = _torso_keypoints()
    for k, (x, y) in extra_points:
        kpts[k] = (x, y, 2)
    if scale != 1.0:
        kpts = [
            ((x * scale, y * scale, v) if v > 0 else (0.0, 0.0, 0))
            for x, y, v in kpts
        ]
    return make_annotation(ann_id, image_id, keypoints=kpts,
                           bbox=(10.0, 10.0, 400.0 * scale, 400.0 * scale))


# --- alignment -----------------------------------------------------------------


def test_alignment_frozen_example():
    # torso height 50px, wrist 100px right of mid-hip -> radius exactly 2.0
    ann = _torso_annotation(extra_points=[(L_WRIST, (200.0, 200.0))])
    coords, labeled = align_skeleton(ann)
    np.testing.assert_allclose((coords[L_HIP] + coords[R_HIP]) / 2.0,
                               [0.0, 0.0], atol=0.0)
    np.testing.assert_allclose(coords[L_WRIST], [2.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(
        (coords[L_SHOULDER] + coords[R_SHOULDER]) / 2.0, [0.0, -1.0],
        atol=1e-15)
    assert labeled[L_WRIST] and labeled[L_HIP]
    assert not labeled[0]


def test_alignment_gate_requires_full_torso():
    kpts = _torso_keypoints()
    kpts[R_SHOULDER] = (0.0, 0.0, 0)
    ann = make_annotation(1, 1, keypoints=kpts, bbox=(10, 10, 300, 300))
    assert align_skeleton(ann) is None
    # v=1 torso keypoints still count as labeled
    kpts2 = _torso_keypoints()
    kpts2[R_SHOULDER] = (110.0, 150.0, 1)
    ann2 = make_annotation(1, 1, keypoints=kpts2, bbox=(10, 10, 300, 300))
    assert align_skeleton(ann2) is not None


def test_alignment_degenerate_torso():
    kpts = _torso_keypoints(hip_y=150.0)  # hips on the shoulder line
    ann = make_annotation(1, 1, keypoints=kpts, bbox=(10, 10, 300, 300))
    with pytest.raises(DegenerateTorsoError):
        align_skeleton(ann)


def test_alignment_scale_invariance():
    base = _torso_annotation(extra_points=[(L_WRIST, (203.0, 171.0)),
                                           (0, (97.0, 120.0))])
    coords0, _ = align_skeleton(base)
    for s in (0.25, 3.0, 17.5):
        scaled = _torso_annotation(extra_points=[(L_WRIST, (203.0, 171.0)),
                                                 (0, (97.0, 120.0))], scale=s)
        coords, _ = align_skeleton(scaled)
        np.testing.assert_allclose(coords, coords0, atol=1e-9)


# --- grid binning -----------------------------------------------------------------


def test_bin_of_frozen_values():
    g = PoseHeatmapGrid(extent=3.0, resolution=101)
    assert g.center_bin() == 50
    assert g.bin_of(0.0) == 50
    assert g.bin_of(2.0) == 84
    assert g.bin_of(-3.0) == 0
    assert g.bin_of(3.0) == 100  # the closed upper edge folds into the last bin
    assert g.bin_of(3.0000001) == -1
    assert g.bin_of(-3.0000001) == -1


def test_grid_validation():
    with pytest.raises(ValueError):
        PoseHeatmapGrid(extent=0.0, resolution=101)
    with pytest.raises(ValueError):
        PoseHeatmapGrid(extent=3.0, resolution=100)  # must be odd
    with pytest.raises(ValueError):
        PoseHeatmapGrid(extent=3.0, resolution=1)


def test_single_skeleton_center_mass():
    ds = make_dataset([_torso_annotation(extra_points=[(L_WRIST, (200.0, 200.0))])])
    grid = pose_heatmaps(ds)
    # mid-hip derived keypoints: both hips mirror around the center bin row
    hip_plane = grid.counts[L_HIP] + grid.counts[R_HIP]
    assert hip_plane.sum() == 2
    assert grid.counts[L_WRIST][50, 84] == 1  # (y bin, x bin) for (2.0, 0.0)
    assert grid.counts[L_WRIST].sum() == 1
    assert grid.counts[0].sum() == 0  # nose unlabeled
    assert grid.instance_count == 1


def test_heatmaps_match_hand_binning_oracle():
    rng = np.random.default_rng(12)
    anns = []
    for i in range(40):
        extra = [(k, (rng.uniform(0, 400), rng.uniform(0, 400)))
                 for k in (0, 7, L_WRIST, 15)]
        anns.append(_torso_annotation(extra_points=extra, ann_id=i + 1,
                                      image_id=i + 1))
    ds = make_dataset(anns)
    grid = pose_heatmaps(ds)

    expect = np.zeros((17, 101, 101), dtype=np.int64)
    overflow = np.zeros(17, dtype=np.int64)
    for ann in ds.annotations:
        res = align_skeleton(ann)
        assert res is not None
        coords, labeled = res
        for k in range(17):
            if not labeled[k]:
                continue
            bx = _hand_bin(coords[k][0])
            by = _hand_bin(coords[k][1])
            if bx < 0 or by < 0:
                overflow[k] += 1
            else:
                expect[k][by, bx] += 1
    np.testing.assert_array_equal(grid.counts, expect)
    np.testing.assert_array_equal(grid.overflow, overflow)


def _hand_bin(value, extent=3.0, resolution=101):
    if value < -extent or value > extent:
        return -1
    if value == extent:
        return resolution - 1
    return int(math.floor((value + extent) / (2.0 * extent) * resolution))


def test_overflow_tally():
    ann = _torso_annotation(extra_points=[(L_WRIST, (100.0 + 50.0 * 3.5, 200.0))])
    grid = pose_heatmaps(make_dataset([ann]))
    assert grid.overflow[L_WRIST] == 1
    assert grid.counts[L_WRIST].sum() == 0
    # the overflow joint still counted the instance
    assert grid.instance_count == 1


def test_gate_skips_instance_entirely():
    kpts = _torso_keypoints()
    kpts[R_HIP] = (0.0, 0.0, 0)
    kpts[L_WRIST] = (150.0, 180.0, 2)
    gated = make_annotation(1, 1, keypoints=kpts, bbox=(10, 10, 300, 300))
    grid = pose_heatmaps(make_dataset([gated]))
    assert grid.instance_count == 0
    assert grid.total_count() == 0


def test_merge_equals_single_pass():
    rng = np.random.default_rng(77)
    anns = []
    for i in range(30):
        extra = [(k, (rng.uniform(0, 380), rng.uniform(0, 380)))
                 for k in (0, 8, L_WRIST)]
        anns.append(_torso_annotation(extra_points=extra, ann_id=i + 1,
                                      image_id=i + 1))
    full = make_dataset(anns)
    part1 = make_dataset(anns[:11])
    part2 = make_dataset(anns[11:23])
    part3 = make_dataset(anns[23:])

    merged = pose_heatmaps(part1)
    merged.merge(pose_heatmaps(part2))
    merged.merge(pose_heatmaps(part3))
    single = pose_heatmaps(full)
    np.testing.assert_array_equal(merged.counts, single.counts)
    np.testing.assert_array_equal(merged.overflow, single.overflow)
    assert merged.instance_count == single.instance_count


def test_merge_rejects_mismatched_geometry():
    a = PoseHeatmapGrid(extent=3.0, resolution=101)
    b = PoseHeatmapGrid(extent=2.0, resolution=101)
    c = PoseHeatmapGrid(extent=3.0, resolution=51)
    with pytest.raises(ValueError):
        a.merge(b)
    with pytest.raises(ValueError):
        a.merge(c)


# --- dataset statistics -------------------------------------------------------------


def test_statistics_empty_dataset():
    stats = dataset_statistics(AnnotatedDataset(images=(), annotations=()))
    assert stats["images"] == 0
    assert stats["annotations"] == 0
    assert stats["annotations_per_range"] == [0] * 6
    assert all(row is None for row in stats["keypoint_rates"])
    assert stats["box_area"] is None
    assert stats["mean_labeled_keypoints"] is None


def test_statistics_basic_numbers():
    anns = [
        make_annotation(1, 1, bbox=bbox_for_area(2000.0), labeled=[0, 5]),
        make_annotation(2, 1, bbox=bbox_for_area(5000.0), labeled=[0]),
        make_annotation(3, 2, bbox=bbox_for_area(12000.0), labeled=list(range(17))),
    ]
    ds = make_dataset(anns)
    stats = dataset_statistics(ds)
    assert stats["images"] == 2
    assert stats["annotations"] == 3
    assert sum(stats["annotations_per_range"]) == 3
    assert stats["boxes_per_image"] == [[1, 1], [2, 1]]
    assert stats["mean_labeled_keypoints"] == pytest.approx((2 + 1 + 17) / 3)
    areas = [a.area for a in anns]
    assert stats["box_area"]["min"] == pytest.approx(min(areas))
    assert stats["box_area"]["max"] == pytest.approx(max(areas))
    assert stats["box_area"]["mean"] == pytest.approx(sum(areas) / 3)


def test_statistics_rates_match_profile():
    # nonempty buckets agree bit-for-bit with the reference-profile rates
    rng = np.random.default_rng(3)
    anns = []
    for i in range(60):
        area = float(rng.choice((600.0, 2500.0, 30000.0)))
        labeled = [0] + [k for k in range(1, 17) if rng.random() < 0.7]
        anns.append(make_annotation(i + 1, i + 1, bbox=bbox_for_area(area),
                                    labeled=labeled))
    ds = make_dataset(anns)
    stats = dataset_statistics(ds)
    profile = compute_profile(ds)
    for r in range(6):
        row = stats["keypoint_rates"][r]
        if profile.range_counts[r] == 0:
            assert row is None
            continue
        assert row == list(profile.keypoint_rates[r])
        assert stats["annotations_per_range"][r] == profile.range_counts[r]


# --- text emission --------------------------------------------------------------


def test_rates_csv_shape():
    ds = make_dataset([make_annotation(1, 1, bbox=bbox_for_area(2000.0),
                                       labeled=[0, 5])])
    text = rates_csv(ds)
    lines = text.strip().splitlines()
    assert len(lines) == 7  # header + six ranges
    header = lines[0].split(",")
    assert header[0] == "range_start"
    assert len(header) == 1 + 1 + 17  # start, count, 17 keypoint columns


def test_heatmap_csv_and_summary():
    ds = make_dataset([_torso_annotation(extra_points=[(L_WRIST, (200.0, 200.0))])])
    grid = pose_heatmaps(ds)
    text = heatmap_csv(grid, L_WRIST)
    rows = text.strip().splitlines()
    assert len(rows) == DEFAULT_RESOLUTION
    assert sum(int(v) for row in rows for v in row.split(",")) == 1
    with pytest.raises(IndexError):
        heatmap_csv(grid, 17)

    summary = heatmap_summary_obj(grid)
    assert summary["extent"] == DEFAULT_EXTENT
    assert summary["resolution"] == DEFAULT_RESOLUTION
    assert summary["instance_count"] == 1
    assert len(summary["in_grid_counts"]) == 17
    assert len(summary["overflow_counts"]) == 17
    assert summary["in_grid_counts"][L_WRIST] == 1
