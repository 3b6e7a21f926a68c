"""Reading, validating, and writing COCO person-keypoints annotation files.

The on-disk format is the standard COCO keypoints layout: a JSON object with
``images``, ``annotations``, and ``categories`` arrays.  Every person
annotation carries a flat list of 51 keypoint values (17 triplets of
``x, y, v`` where ``v`` is 0 = absent, 1 = labeled but occluded,
2 = labeled and visible), a ``bbox`` as ``[x, y, w, h]``, an ``area``, and a
``num_keypoints`` count of triplets with ``v > 0``.

Two guarantees matter here and are tested:

* parsing is total: malformed input raises :class:`MalformedFileError` or
  :class:`SchemaViolationError`, never an unhandled crash, and
* writing is byte-deterministic: the same dataset always serializes to the
  same bytes, with a stable key order and shortest round-trip float
  representation, so written files can be compared with a plain checksum.

Unknown fields found in a file are preserved opaquely per record and written
back on serialization, so foreign datasets survive a read/write cycle.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any

COCO_KEYPOINT_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

# Standard COCO person skeleton, 1-based joint indices.
COCO_SKELETON = (
    (16, 14), (14, 12), (17, 15), (15, 13), (12, 13), (6, 12), (7, 13),
    (6, 7), (6, 8), (7, 9), (8, 10), (9, 11), (2, 3), (1, 2), (1, 3),
    (2, 4), (3, 5), (4, 6), (5, 7),
)

NUM_KEYPOINTS = len(COCO_KEYPOINT_NAMES)

VISIBILITY_ABSENT = 0
VISIBILITY_OCCLUDED = 1
VISIBILITY_VISIBLE = 2


class MalformedFileError(ValueError):
    """The file is not syntactically valid JSON or not a JSON object."""


class SchemaViolationError(ValueError):
    """The file is valid JSON but violates the annotation schema.

    ``location`` points at the offending element, e.g.
    ``annotations[3].keypoints``.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class KeypointSchema:
    """Keypoint vocabulary: ordered joint names plus 1-based skeleton edges."""

    names: tuple = COCO_KEYPOINT_NAMES
    skeleton_edges: tuple = COCO_SKELETON
    category_id: int = 1
    category_name: str = "person"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.names) != NUM_KEYPOINTS:
            raise SchemaViolationError(
                f"expected {NUM_KEYPOINTS} keypoint names, got {len(self.names)}",
                "categories[0].keypoints",
            )
        for a, b in self.skeleton_edges:
            if not (1 <= a <= len(self.names) and 1 <= b <= len(self.names)):
                raise SchemaViolationError(
                    f"skeleton edge ({a}, {b}) out of range", "categories[0].skeleton"
                )


DEFAULT_SCHEMA = KeypointSchema()


@dataclass(frozen=True)
class ImageRecord:
    id: int
    width: int
    height: int
    file_name: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id < 1:
            raise SchemaViolationError(f"image id must be >= 1, got {self.id}")
        if self.width < 1 or self.height < 1:
            raise SchemaViolationError(
                f"image {self.id} has non-positive dimensions "
                f"{self.width}x{self.height}"
            )


@dataclass(frozen=True)
class PersonAnnotation:
    """One person instance: bbox, area, and 17 keypoint triplets."""

    id: int
    image_id: int
    bbox: tuple  # (x, y, w, h)
    area: float
    keypoints: tuple  # 17 triplets (x, y, v)
    num_keypoints: int
    iscrowd: int = 0
    category_id: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        loc = f"annotation {self.id}"
        if self.id < 1:
            raise SchemaViolationError(f"id must be >= 1, got {self.id}", loc)
        if self.image_id < 1:
            raise SchemaViolationError(
                f"image_id must be >= 1, got {self.image_id}", loc
            )
        if len(self.bbox) != 4:
            raise SchemaViolationError("bbox must have 4 entries", loc)
        if not (self.bbox[2] > 0 and self.bbox[3] > 0):
            raise SchemaViolationError(
                f"bbox width/height must be positive, got {self.bbox!r}", loc
            )
        if len(self.keypoints) != NUM_KEYPOINTS:
            raise SchemaViolationError(
                f"expected {NUM_KEYPOINTS} keypoint triplets, "
                f"got {len(self.keypoints)}",
                loc,
            )
        labeled = 0
        for i, (x, y, v) in enumerate(self.keypoints):
            if v not in (0, 1, 2):
                raise SchemaViolationError(
                    f"keypoint {i} visibility {v!r} not in {{0, 1, 2}}", loc
                )
            if v == 0 and (x != 0 or y != 0):
                raise SchemaViolationError(
                    f"keypoint {i} has v=0 but nonzero coordinates", loc
                )
            if v > 0:
                labeled += 1
        if labeled != self.num_keypoints:
            raise SchemaViolationError(
                f"num_keypoints={self.num_keypoints} but {labeled} triplets "
                "have v > 0",
                loc,
            )
        if self.iscrowd not in (0, 1):
            raise SchemaViolationError(f"iscrowd {self.iscrowd!r} not in {{0, 1}}", loc)

    def labeled_count(self) -> int:
        """Number of triplets with v > 0 (always equals num_keypoints)."""
        return sum(1 for _, _, v in self.keypoints if v > 0)


@dataclass(frozen=True)
class AnnotatedDataset:
    images: tuple
    annotations: tuple
    schema: KeypointSchema = DEFAULT_SCHEMA
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        """Check cross-record invariants; raises SchemaViolationError."""
        by_id = {}
        for im in self.images:
            if im.id in by_id:
                raise SchemaViolationError(f"duplicate image id {im.id}", "images")
            by_id[im.id] = im
        seen = set()
        for ann in self.annotations:
            loc = f"annotation {ann.id}"
            if ann.id in seen:
                raise SchemaViolationError(f"duplicate annotation id {ann.id}")
            seen.add(ann.id)
            im = by_id.get(ann.image_id)
            if im is None:
                raise SchemaViolationError(
                    f"image_id {ann.image_id} does not resolve", loc
                )
            x, y, w, h = ann.bbox
            if x >= im.width or x + w <= 0 or y >= im.height or y + h <= 0:
                raise SchemaViolationError(
                    f"bbox {ann.bbox!r} does not intersect image "
                    f"[0, {im.width}] x [0, {im.height}]",
                    loc,
                )

    def annotations_for(self, image_id: int) -> list:
        return [a for a in self.annotations if a.image_id == image_id]


def _expect(cond: bool, message: str, location: str) -> None:
    if not cond:
        raise SchemaViolationError(message, location)


def _as_number(value: Any, message: str, location: str) -> float:
    # bool is an int subclass; reject it explicitly.
    _expect(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        message,
        location,
    )
    val = float(value)
    _expect(math.isfinite(val), f"{message} (not finite)", location)
    return val


def _as_int(value: Any, message: str, location: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool), message, location)
    return value


def _parse_image(obj: Any, idx: int) -> ImageRecord:
    loc = f"images[{idx}]"
    _expect(isinstance(obj, dict), "image entry must be an object", loc)
    for key in ("id", "width", "height", "file_name"):
        _expect(key in obj, f"missing required key {key!r}", loc)
    rec_id = _as_int(obj["id"], "id must be an integer", loc)
    width = _as_int(obj["width"], "width must be an integer", loc)
    height = _as_int(obj["height"], "height must be an integer", loc)
    _expect(width >= 1 and height >= 1, "width/height must be >= 1", loc)
    _expect(isinstance(obj["file_name"], str), "file_name must be a string", loc)
    extra = {k: v for k, v in obj.items()
             if k not in ("id", "width", "height", "file_name")}
    return ImageRecord(rec_id, width, height, obj["file_name"], extra)


def _parse_annotation(obj: Any, idx: int, category_id: int) -> PersonAnnotation:
    loc = f"annotations[{idx}]"
    _expect(isinstance(obj, dict), "annotation entry must be an object", loc)
    for key in ("id", "image_id", "bbox", "area", "keypoints", "num_keypoints"):
        _expect(key in obj, f"missing required key {key!r}", loc)
    ann_id = _as_int(obj["id"], "id must be an integer", loc)
    image_id = _as_int(obj["image_id"], "image_id must be an integer", loc)
    raw_bbox = obj["bbox"]
    _expect(
        isinstance(raw_bbox, list) and len(raw_bbox) == 4,
        "bbox must be a list of 4 numbers",
        f"{loc}.bbox",
    )
    bbox = tuple(
        _as_number(v, "bbox entries must be numbers", f"{loc}.bbox") for v in raw_bbox
    )
    _expect(bbox[2] > 0 and bbox[3] > 0,
            f"bbox width/height must be positive, got {list(bbox)!r}", f"{loc}.bbox")
    area = _as_number(obj["area"], "area must be a number", f"{loc}.area")
    _expect(area > 0, "area must be positive", f"{loc}.area")
    raw_kp = obj["keypoints"]
    _expect(
        isinstance(raw_kp, list) and len(raw_kp) == 3 * NUM_KEYPOINTS,
        f"keypoints must be a flat list of {3 * NUM_KEYPOINTS} numbers",
        f"{loc}.keypoints",
    )
    triplets = []
    for k in range(NUM_KEYPOINTS):
        x = _as_number(raw_kp[3 * k], "keypoint x must be a number", f"{loc}.keypoints")
        y = _as_number(raw_kp[3 * k + 1], "keypoint y must be a number",
                       f"{loc}.keypoints")
        v = _as_int(raw_kp[3 * k + 2], "keypoint v must be an integer",
                    f"{loc}.keypoints")
        _expect(v in (0, 1, 2), f"keypoint v={v!r} not in {{0, 1, 2}}",
                f"{loc}.keypoints")
        _expect(v != 0 or (x == 0 and y == 0),
                f"keypoint {k} has v=0 but nonzero coordinates", f"{loc}.keypoints")
        triplets.append((x, y, v))
    num_kp = _as_int(obj["num_keypoints"], "num_keypoints must be an integer",
                     f"{loc}.num_keypoints")
    labeled = sum(1 for _, _, v in triplets if v > 0)
    _expect(num_kp == labeled,
            f"num_keypoints={num_kp} but {labeled} triplets have v > 0",
            f"{loc}.num_keypoints")
    iscrowd = obj.get("iscrowd", 0)
    iscrowd = _as_int(iscrowd, "iscrowd must be an integer", f"{loc}.iscrowd")
    _expect(iscrowd in (0, 1), f"iscrowd={iscrowd!r} not in {{0, 1}}",
            f"{loc}.iscrowd")
    got_cat = obj.get("category_id", category_id)
    got_cat = _as_int(got_cat, "category_id must be an integer", f"{loc}.category_id")
    _expect(got_cat == category_id,
            f"category_id={got_cat} does not match the person category "
            f"{category_id}", f"{loc}.category_id")
    known = ("id", "image_id", "bbox", "area", "keypoints", "num_keypoints",
             "iscrowd", "category_id")
    extra = {k: v for k, v in obj.items() if k not in known}
    try:
        return PersonAnnotation(
            id=ann_id, image_id=image_id, bbox=bbox, area=area,
            keypoints=tuple(triplets), num_keypoints=num_kp,
            iscrowd=iscrowd, category_id=got_cat, extra=extra,
        )
    except SchemaViolationError as err:
        raise SchemaViolationError(str(err), loc) from None


def _parse_schema(obj: Any) -> KeypointSchema:
    loc = "categories"
    _expect(isinstance(obj, list) and len(obj) == 1,
            "categories must be a list with exactly one person category", loc)
    cat = obj[0]
    loc = "categories[0]"
    _expect(isinstance(cat, dict), "category must be an object", loc)
    for key in ("id", "name", "keypoints", "skeleton"):
        _expect(key in cat, f"missing required key {key!r}", loc)
    cat_id = _as_int(cat["id"], "id must be an integer", loc)
    _expect(isinstance(cat["name"], str), "name must be a string", loc)
    names = cat["keypoints"]
    _expect(isinstance(names, list) and all(isinstance(n, str) for n in names),
            "keypoints must be a list of strings", f"{loc}.keypoints")
    _expect(len(names) == NUM_KEYPOINTS,
            f"expected {NUM_KEYPOINTS} keypoint names, got {len(names)}",
            f"{loc}.keypoints")
    skeleton = cat["skeleton"]
    _expect(isinstance(skeleton, list), "skeleton must be a list of joint pairs",
            f"{loc}.skeleton")
    edges = []
    for e in skeleton:
        _expect(isinstance(e, list) and len(e) == 2, "skeleton edges must be pairs",
                f"{loc}.skeleton")
        a = _as_int(e[0], "edge endpoints must be integers", f"{loc}.skeleton")
        b = _as_int(e[1], "edge endpoints must be integers", f"{loc}.skeleton")
        _expect(1 <= a <= NUM_KEYPOINTS and 1 <= b <= NUM_KEYPOINTS,
                f"skeleton edge ({a}, {b}) out of range [1, {NUM_KEYPOINTS}]",
                f"{loc}.skeleton")
        edges.append((a, b))
    extra = {k: v for k, v in cat.items()
             if k not in ("id", "name", "keypoints", "skeleton")}
    return KeypointSchema(
        names=tuple(names), skeleton_edges=tuple(edges),
        category_id=cat_id, category_name=cat["name"], extra=extra,
    )


def parse_dataset(path) -> AnnotatedDataset:
    """Parse and fully validate a COCO person-keypoints file.

    Raises MalformedFileError for broken JSON, SchemaViolationError for any
    schema violation (with the offending location in the message), and lets
    OSError propagate for filesystem failures.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise MalformedFileError(f"{path}: invalid JSON: {err}") from None
    return parse_dataset_obj(raw)


def parse_dataset_obj(raw: Any) -> AnnotatedDataset:
    """Validate an already-decoded JSON object as a dataset."""
    if not isinstance(raw, dict):
        raise MalformedFileError("top-level JSON value must be an object")
    for key in ("images", "annotations", "categories"):
        _expect(key in raw, f"missing required key {key!r}", "$")
        _expect(isinstance(raw[key], list), f"{key} must be a list", "$")
    schema = _parse_schema(raw["categories"])
    images = tuple(_parse_image(obj, i) for i, obj in enumerate(raw["images"]))
    annotations = tuple(
        _parse_annotation(obj, i, schema.category_id)
        for i, obj in enumerate(raw["annotations"])
    )
    extra = {k: v for k, v in raw.items()
             if k not in ("images", "annotations", "categories")}
    ds = AnnotatedDataset(images=images, annotations=annotations,
                          schema=schema, extra=extra)
    ds.validate()
    return ds


def _image_obj(im: ImageRecord) -> dict:
    out = {"id": im.id, "width": im.width, "height": im.height,
           "file_name": im.file_name}
    for k in sorted(im.extra):
        out[k] = im.extra[k]
    return out


def _annotation_obj(ann: PersonAnnotation) -> dict:
    flat = []
    for x, y, v in ann.keypoints:
        flat.extend((float(x), float(y), int(v)))
    out = {
        "id": ann.id,
        "image_id": ann.image_id,
        "category_id": ann.category_id,
        "iscrowd": ann.iscrowd,
        "bbox": [float(v) for v in ann.bbox],
        "area": float(ann.area),
        "keypoints": flat,
        "num_keypoints": ann.num_keypoints,
    }
    for k in sorted(ann.extra):
        out[k] = ann.extra[k]
    return out


def _category_obj(schema: KeypointSchema) -> dict:
    out = {
        "id": schema.category_id,
        "name": schema.category_name,
        "keypoints": list(schema.names),
        "skeleton": [[a, b] for a, b in schema.skeleton_edges],
    }
    for k in sorted(schema.extra):
        out[k] = schema.extra[k]
    return out


def dataset_to_obj(ds: AnnotatedDataset) -> dict:
    obj = {
        "images": [_image_obj(im) for im in ds.images],
        "annotations": [_annotation_obj(a) for a in ds.annotations],
        "categories": [_category_obj(ds.schema)],
    }
    for k in sorted(ds.extra):
        obj[k] = ds.extra[k]
    return obj


def dumps_canonical(obj: Any, indent: int | None = None) -> str:
    """Serialize to JSON deterministically.

    Key order is taken from dict insertion order (callers build dicts in
    canonical order), floats use the shortest round-trip representation, and
    NaN/Inf are rejected rather than silently emitted.
    """
    if indent is None:
        return json.dumps(obj, ensure_ascii=False, allow_nan=False,
                          separators=(",", ":"))
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, indent=indent)


def write_dataset(ds: AnnotatedDataset, path) -> None:
    """Write a dataset as canonical COCO JSON. Byte-deterministic."""
    ds.validate()
    text = dumps_canonical(dataset_to_obj(ds))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Sidecar scene-parameter files.
#
# One JSON document per generated frame recording the sampled parametric
# state.  The writer is byte-deterministic like the annotation writer.
# ---------------------------------------------------------------------------

OCCLUDER_SHAPES = ("sphere", "capsule", "box")

_SIDECAR_REQUIRED = ("frame_index", "frame_seed", "camera", "lighting_meta",
                     "background_hdri_id", "human", "occluders")

_CAMERA_KEYS = ("target", "radius", "azimuth", "elevation", "vertical_fov",
                "image_width", "image_height")


def _expect_vec3(value: Any, name: str, loc: str) -> None:
    _expect(isinstance(value, list) and len(value) == 3,
            f"{name} must be a list of 3 numbers", loc)
    for v in value:
        _as_number(v, f"{name} entries must be numbers", loc)


def parse_sidecar(path) -> dict:
    """Parse and validate one sidecar scene-parameter file into a dict."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise MalformedFileError(f"{path}: invalid JSON: {err}") from None
    return validate_sidecar_obj(raw)


def validate_sidecar_obj(raw: Any) -> dict:
    loc = "sidecar"
    _expect(isinstance(raw, dict), "sidecar must be a JSON object", loc)
    for key in _SIDECAR_REQUIRED:
        _expect(key in raw, f"missing required key {key!r}", loc)
    _expect(_as_int(raw["frame_index"], "frame_index must be an integer", loc) >= 0,
            "frame_index must be >= 0", loc)
    _as_int(raw["frame_seed"], "frame_seed must be an integer", loc)
    cam = raw["camera"]
    _expect(isinstance(cam, dict), "camera must be an object", f"{loc}.camera")
    for key in _CAMERA_KEYS:
        _expect(key in cam, f"missing camera key {key!r}", f"{loc}.camera")
    _expect_vec3(cam["target"], "target", f"{loc}.camera")
    for key in ("radius", "azimuth", "elevation", "vertical_fov"):
        _as_number(cam[key], f"{key} must be a number", f"{loc}.camera")
    for key in ("image_width", "image_height"):
        _expect(_as_int(cam[key], f"{key} must be an integer", f"{loc}.camera") >= 1,
                f"{key} must be >= 1", f"{loc}.camera")
    light = raw["lighting_meta"]
    _expect(isinstance(light, dict), "lighting_meta must be an object",
            f"{loc}.lighting_meta")
    for key in ("intensity", "sun_time_of_day", "sun_day_of_year"):
        _expect(key in light, f"missing lighting key {key!r}", f"{loc}.lighting_meta")
        _as_number(light[key], f"{key} must be a number", f"{loc}.lighting_meta")
    _expect(_as_int(raw["background_hdri_id"],
                    "background_hdri_id must be an integer", loc) >= 0,
            "background_hdri_id must be >= 0", loc)
    humans = raw["human"]
    _expect(isinstance(humans, list), "human must be a list", f"{loc}.human")
    for i, hm in enumerate(humans):
        hloc = f"{loc}.human[{i}]"
        _expect(isinstance(hm, dict), "human entry must be an object", hloc)
        for key in ("pose_id", "root", "heading", "scale"):
            _expect(key in hm, f"missing key {key!r}", hloc)
        _expect(isinstance(hm["pose_id"], str), "pose_id must be a string", hloc)
        _expect_vec3(hm["root"], "root", hloc)
        _as_number(hm["heading"], "heading must be a number", hloc)
        _expect(_as_number(hm["scale"], "scale must be a number", hloc) > 0,
                "scale must be positive", hloc)
    occs = raw["occluders"]
    _expect(isinstance(occs, list), "occluders must be a list", f"{loc}.occluders")
    for i, oc in enumerate(occs):
        oloc = f"{loc}.occluders[{i}]"
        _expect(isinstance(oc, dict), "occluder entry must be an object", oloc)
        for key in ("shape", "center", "yaw", "pitch", "size", "texture_id"):
            _expect(key in oc, f"missing key {key!r}", oloc)
        _expect(oc["shape"] in OCCLUDER_SHAPES,
                f"shape {oc['shape']!r} not in {OCCLUDER_SHAPES}", oloc)
        _expect_vec3(oc["center"], "center", oloc)
        _as_number(oc["yaw"], "yaw must be a number", oloc)
        _as_number(oc["pitch"], "pitch must be a number", oloc)
        _expect(isinstance(oc["size"], list) and len(oc["size"]) >= 1,
                "size must be a non-empty list", oloc)
        for v in oc["size"]:
            _expect(_as_number(v, "size entries must be numbers", oloc) > 0,
                    "size entries must be positive", oloc)
        _as_int(oc["texture_id"], "texture_id must be an integer", oloc)
    return raw


def write_sidecar(obj: dict, path) -> None:
    """Validate and write one sidecar document. Byte-deterministic."""
    validate_sidecar_obj(obj)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(obj, indent=2))
        fh.write("\n")
