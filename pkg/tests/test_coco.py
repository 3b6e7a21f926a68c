"""Round-trip, validation, and determinism tests for the annotation files."""

import hashlib
import json

import pytest

from synthpose.coco import (
    AnnotatedDataset,
    ImageRecord,
    MalformedFileError,
    PersonAnnotation,
    SchemaViolationError,
    dumps_canonical,
    parse_dataset,
    parse_sidecar,
    write_dataset,
    write_sidecar,
)

from _fixtures import (
    coco_file_obj,
    make_annotation,
    make_dataset,
    make_keypoints,
    raw_annotation,
    raw_image,
    write_json,
)

# Produced once from the fixed three-annotation dataset below and frozen.
GOLDEN_SHA256 = "9be7f83ce1064a1be6f0200265c56895ca61d0c9ca2f5be104de5b3a86459eb6"
GOLDEN_SIZE = 1554


def golden_dataset() -> AnnotatedDataset:
    ann1 = make_annotation(1, 1, labeled=[0, 5, 6, 11, 12],
                           bbox=(12.5, 20.0, 100.0, 200.0))
    ann2 = make_annotation(2, 1, labeled=[], bbox=(300.25, 41.75, 33.5, 67.125))
    ann3 = make_annotation(3, 2, labeled=range(17), bbox=(0.1, 0.2, 160.0, 320.0))
    return make_dataset([ann1, ann2, ann3])


def test_golden_checksum(tmp_path):
    path = tmp_path / "golden.json"
    write_dataset(golden_dataset(), path)
    data = path.read_bytes()
    assert len(data) == GOLDEN_SIZE
    assert hashlib.sha256(data).hexdigest() == GOLDEN_SHA256


def test_write_is_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    write_dataset(golden_dataset(), a)
    write_dataset(golden_dataset(), b)
    assert a.read_bytes() == b.read_bytes()


def test_round_trip_identity(tmp_path):
    ds = golden_dataset()
    path = tmp_path / "ds.json"
    write_dataset(ds, path)
    back = parse_dataset(path)
    assert back == ds


def test_round_trip_preserves_floats_exactly(tmp_path):
    # values with no short decimal form survive the trip bit-for-bit
    x = 0.1 + 0.2
    ann = make_annotation(1, 1, bbox=(x, 2.0 / 3.0, 50.0, 80.0))
    ds = make_dataset([ann])
    path = tmp_path / "f.json"
    write_dataset(ds, path)
    back = parse_dataset(path)
    assert back.annotations[0].bbox[0] == x
    assert back.annotations[0].bbox[1] == 2.0 / 3.0


def test_canonical_float_formatting():
    s = dumps_canonical({"x": 0.1 + 0.2, "y": 1.0})
    assert s == '{"x":0.30000000000000004,"y":1.0}'


def test_empty_dataset_round_trips(tmp_path):
    ds = AnnotatedDataset(images=(), annotations=())
    path = tmp_path / "empty.json"
    write_dataset(ds, path)
    back = parse_dataset(path)
    assert back.images == ()
    assert back.annotations == ()


def test_extras_pass_through(tmp_path):
    obj = coco_file_obj(
        [raw_image(1, license=4, coco_url="http://example/x.png")],
        [raw_annotation(1, 1, score=0.25, note="wild")],
        info={"year": 2026, "contributor": "fixture"},
        licenses=[{"id": 4, "name": "test"}],
    )
    path = write_json(tmp_path / "wild.json", obj)
    ds = parse_dataset(path)
    assert ds.images[0].extra["license"] == 4
    assert ds.annotations[0].extra["score"] == 0.25
    assert ds.extra["info"]["year"] == 2026

    out = tmp_path / "wild_out.json"
    write_dataset(ds, out)
    back = parse_dataset(out)
    assert back == ds
    reread = json.loads(out.read_text())
    assert reread["info"] == {"year": 2026, "contributor": "fixture"}
    assert reread["annotations"][0]["note"] == "wild"


def test_num_keypoints_matches_hand_count(tmp_path):
    obj = coco_file_obj([raw_image(1)], [raw_annotation(1, 1, labeled=[0, 3, 9, 16])])
    path = write_json(tmp_path / "h.json", obj)
    ds = parse_dataset(path)
    ann = ds.annotations[0]
    assert ann.num_keypoints == 4
    assert ann.num_keypoints == sum(1 for _, _, v in ann.keypoints if v > 0)


# --- malformed corpus: every entry must raise the stated typed error -------


def _corrupt(base_obj, mutate):
    obj = json.loads(json.dumps(base_obj))
    mutate(obj)
    return obj


def _base_obj():
    return coco_file_obj([raw_image(1)], [raw_annotation(1, 1)])


MALFORMED_CASES = [
    ("keypoints_50_numbers",
     lambda o: o["annotations"][0].__setitem__(
         "keypoints", o["annotations"][0]["keypoints"][:50])),
    ("missing_images_key", lambda o: o.pop("images")),
    ("missing_bbox", lambda o: o["annotations"][0].pop("bbox")),
    ("bbox_three_entries",
     lambda o: o["annotations"][0].__setitem__("bbox", [1.0, 2.0, 3.0])),
    ("bbox_zero_width",
     lambda o: o["annotations"][0].__setitem__("bbox", [1.0, 2.0, 0.0, 5.0])),
    ("negative_area", lambda o: o["annotations"][0].__setitem__("area", -3.0)),
    ("bad_visibility_flag",
     lambda o: o["annotations"][0]["keypoints"].__setitem__(2, 7)),
    ("v0_with_coordinates",
     lambda o: o["annotations"][0]["keypoints"].__setitem__(3, 9.0)),
    ("num_keypoints_mismatch",
     lambda o: o["annotations"][0].__setitem__("num_keypoints", 11)),
    ("dangling_image_id",
     lambda o: o["annotations"][0].__setitem__("image_id", 99)),
    ("duplicate_image_ids",
     lambda o: o["images"].append(raw_image(1))),
    ("duplicate_annotation_ids",
     lambda o: o["annotations"].append(raw_annotation(1, 1))),
    ("zero_image_id", lambda o: o["images"][0].__setitem__("id", 0)),
    ("zero_annotation_id", lambda o: o["annotations"][0].__setitem__("id", 0)),
    ("negative_image_dims", lambda o: o["images"][0].__setitem__("width", -640)),
    ("string_bbox_entry",
     lambda o: o["annotations"][0]["bbox"].__setitem__(0, "ten")),
    ("iscrowd_out_of_range",
     lambda o: o["annotations"][0].__setitem__("iscrowd", 2)),
    ("wrong_category_id",
     lambda o: o["annotations"][0].__setitem__("category_id", 3)),
    ("two_categories",
     lambda o: o["categories"].append(dict(o["categories"][0], id=2))),
    ("sixteen_keypoint_names",
     lambda o: o["categories"][0].__setitem__(
         "keypoints", o["categories"][0]["keypoints"][:16])),
    ("skeleton_index_out_of_range",
     lambda o: o["categories"][0]["skeleton"].append([17, 18])),
    ("bbox_outside_image",
     lambda o: o["annotations"][0].__setitem__("bbox", [900.0, 10.0, 5.0, 5.0])),
    ("images_not_list", lambda o: o.__setitem__("images", {"id": 1})),
    ("annotation_not_object",
     lambda o: o.__setitem__("annotations", [17])),
]


@pytest.mark.parametrize("name,mutate", MALFORMED_CASES,
                         ids=[c[0] for c in MALFORMED_CASES])
def test_malformed_corpus_raises_schema_violation(tmp_path, name, mutate):
    obj = _corrupt(_base_obj(), mutate)
    path = write_json(tmp_path / f"{name}.json", obj)
    with pytest.raises(SchemaViolationError):
        parse_dataset(path)


def test_invalid_json_is_malformed_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"images": [')
    with pytest.raises(MalformedFileError):
        parse_dataset(path)


def test_top_level_array_is_malformed_file(tmp_path):
    path = write_json(tmp_path / "arr.json", [1, 2, 3])
    with pytest.raises(MalformedFileError):
        parse_dataset(path)


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        parse_dataset(tmp_path / "nope.json")


def test_schema_violation_carries_location(tmp_path):
    obj = _corrupt(_base_obj(), lambda o: o["annotations"][0].pop("bbox"))
    path = write_json(tmp_path / "loc.json", obj)
    with pytest.raises(SchemaViolationError) as exc:
        parse_dataset(path)
    assert "annotations[0]" in str(exc.value)


# --- constructor validation -------------------------------------------------


def test_image_record_rejects_nonpositive_id():
    with pytest.raises(SchemaViolationError):
        ImageRecord(id=0, width=10, height=10, file_name="x.png")


def test_annotation_rejects_bad_visibility():
    kpts = list(make_keypoints([0]))
    kpts[0] = (5.0, 5.0, 3)
    with pytest.raises(SchemaViolationError):
        make_annotation(1, 1, keypoints=kpts)


def test_annotation_rejects_v0_with_coords():
    kpts = list(make_keypoints([]))
    kpts[4] = (1.0, 0.0, 0)
    with pytest.raises(SchemaViolationError):
        make_annotation(1, 1, keypoints=kpts)


def test_annotation_rejects_wrong_triplet_count():
    with pytest.raises(SchemaViolationError):
        PersonAnnotation(id=1, image_id=1, bbox=(0, 0, 5, 5), area=25.0,
                         keypoints=((0.0, 0.0, 0),) * 16, num_keypoints=0)


def test_dataset_rejects_bbox_disjoint_from_image():
    ann = make_annotation(1, 1, bbox=(700.0, 10.0, 5.0, 5.0))
    ds = AnnotatedDataset(images=(ImageRecord(1, 640, 480, "a.png"),),
                          annotations=(ann,))
    with pytest.raises(SchemaViolationError):
        ds.validate()


# --- sidecar files ----------------------------------------------------------


def test_sidecar_round_trip(tmp_path):
    from synthpose.randomize import generate_scene, preset, scene_sidecar_obj

    cfg = preset("psp-hdri")
    scene = generate_scene(cfg, master_seed=5, frame_index=3)
    obj = scene_sidecar_obj(scene, cfg)
    path = tmp_path / "frame_000003.json"
    write_sidecar(obj, path)
    assert parse_sidecar(path) == obj
    # pretty-printed with trailing newline, stable across writes
    text = path.read_text()
    assert text.endswith("\n")
    write_sidecar(obj, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_sidecar_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(MalformedFileError):
        parse_sidecar(path)
