"""Seeded scene randomization.

Determinism contract: a frame is a pure function of ``(config, master_seed,
frame_index)``.  Seeds form a tree built with a splitmix-style 64-bit mixing
function: ``frame_seed = mix(master_seed, frame_index)`` and each named
randomizer draws from its own generator seeded with
``mix(frame_seed, fnv1a64(name))``, so changing one randomizer's range never
shifts another's draws, and frames can be generated in any order or in
parallel with identical results.  Per-entity child streams are derived the
same way (``mix(stream_seed, entity_index)``).
"""

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from synthpose.poses import PoseLibrary, load_default_library, perturb_joints, \
    build_skeleton
from synthpose.scene import LightingMeta, OccluderPrimitive, OrbitCamera, \
    SceneDescription

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


class InvalidConfigError(ValueError):
    """Raised for out-of-order ranges or unknown enum values."""


class UnknownPresetError(KeyError):
    """Raised for a preset name outside the documented set."""


def splitmix64(x: int) -> int:
    """One splitmix64 step: add the golden-gamma, then finalize."""
    z = (x + _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix(a: int, b: int) -> int:
    """Combine two 64-bit values into one well-mixed 64-bit value."""
    return splitmix64((splitmix64(a & _MASK64) + (b & _MASK64)) & _MASK64)


def fnv1a64(name: str) -> int:
    """FNV-1a hash of a UTF-8 string; stable across processes and runs."""
    h = 0xCBF29CE484222325
    for byte in name.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def frame_seed_of(master_seed: int, frame_index: int) -> int:
    return mix(master_seed, frame_index)


def stream_for(frame_seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named randomizer of one frame."""
    return np.random.Generator(np.random.PCG64(mix(frame_seed, fnv1a64(name))))


def substream(frame_seed: int, name: str, index: int) -> np.random.Generator:
    """Per-entity child stream (stable under entity-count changes)."""
    return np.random.Generator(
        np.random.PCG64(mix(mix(frame_seed, fnv1a64(name)), index))
    )


@dataclass(frozen=True)
class ParamRange:
    """A sampling range: continuous uniform, inclusive integer, or categorical."""

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    items: tuple = ()

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "ParamRange":
        return cls(kind="uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def discrete(cls, lo: int, hi: int) -> "ParamRange":
        return cls(kind="discrete", lo=int(lo), hi=int(hi))

    @classmethod
    def categorical(cls, items) -> "ParamRange":
        return cls(kind="categorical", items=tuple(items))

    def __post_init__(self):
        if self.kind not in ("uniform", "discrete", "categorical"):
            raise InvalidConfigError(f"unknown range kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.items:
                raise InvalidConfigError("categorical range needs at least one item")
        elif self.hi < self.lo:
            raise InvalidConfigError(
                f"range upper bound {self.hi} below lower bound {self.lo}"
            )

    def sample(self, rng: np.random.Generator):
        """Draw one value; a degenerate [a, a] range always yields a."""
        if self.kind == "uniform":
            return float(rng.uniform(self.lo, self.hi))
        if self.kind == "discrete":
            return int(rng.integers(int(self.lo), int(self.hi) + 1))
        return self.items[int(rng.integers(0, len(self.items)))]


OCCLUDER_MODES = ("none", "primitive", "highquality-id")
POSE_MODES = ("simple", "diverse")
ADAPTATION_MODES = (None, "box", "box+kpt")

# Size of the high-quality occluder asset catalog (texture id namespace).
HQ_TEXTURE_COUNT = 200
PRIMITIVE_TEXTURE_COUNT = 1000

# Number of HDRI backgrounds in the default catalog.
DEFAULT_HDRI_COUNT = 510


@dataclass(frozen=True)
class RandomizerConfig:
    """Full parameter-space description for scene generation."""

    human_count: ParamRange = field(
        default_factory=lambda: ParamRange.discrete(1, 10))
    human_scale: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(0.9, 1.1))
    occluder_count: ParamRange = field(
        default_factory=lambda: ParamRange.discrete(0, 8))
    occluder_size: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(0.2, 1.5))
    occluder_mode: str = "primitive"
    placement_extent: float = 3.0
    camera_radius: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(3.0, 12.0))
    camera_azimuth: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(0.0, 2.0 * math.pi))
    camera_elevation: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(-0.2, 1.0))
    camera_fov: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(math.radians(30.0),
                                                   math.radians(70.0)))
    light_intensity: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(0.5, 2.0))
    time_of_day: ParamRange = field(
        default_factory=lambda: ParamRange.uniform(0.0, 24.0))
    day_of_year: ParamRange = field(
        default_factory=lambda: ParamRange.discrete(1, 365))
    pose_mode: str = "diverse"
    hdri_count: int = DEFAULT_HDRI_COUNT
    image_width: int = 640
    image_height: int = 480
    shadergraph_randomization: bool = True
    smaa: bool = False
    adaptation_mode: str | None = None
    preset: str | None = None

    def __post_init__(self):
        if self.occluder_mode not in OCCLUDER_MODES:
            raise InvalidConfigError(
                f"occluder_mode {self.occluder_mode!r} not in {OCCLUDER_MODES}")
        if self.pose_mode not in POSE_MODES:
            raise InvalidConfigError(
                f"pose_mode {self.pose_mode!r} not in {POSE_MODES}")
        if self.adaptation_mode not in ADAPTATION_MODES:
            raise InvalidConfigError(
                f"adaptation_mode {self.adaptation_mode!r} not in "
                f"{ADAPTATION_MODES}")
        if not self.placement_extent > 0:
            raise InvalidConfigError("placement_extent must be positive")
        if self.hdri_count < 1:
            raise InvalidConfigError("hdri_count must be >= 1")
        if self.image_width < 1 or self.image_height < 1:
            raise InvalidConfigError("image dimensions must be >= 1")
        if self.human_count.kind != "discrete" or self.human_count.lo < 0:
            raise InvalidConfigError("human_count must be a discrete range >= 0")
        if self.occluder_count.kind != "discrete" or self.occluder_count.lo < 0:
            raise InvalidConfigError("occluder_count must be a discrete range >= 0")
        for name in ("human_scale", "camera_radius", "camera_fov"):
            rng = getattr(self, name)
            if rng.lo <= 0:
                raise InvalidConfigError(f"{name} must stay positive")

    def to_obj(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, ParamRange):
                if value.kind == "categorical":
                    out[f.name] = {"kind": value.kind, "items": list(value.items)}
                else:
                    out[f.name] = {"kind": value.kind, "lo": value.lo,
                                   "hi": value.hi}
            else:
                out[f.name] = value
        return out

    @classmethod
    def from_obj(cls, obj: dict) -> "RandomizerConfig":
        kwargs = {}
        known = {f.name for f in fields(cls)}
        for key, value in obj.items():
            if key not in known:
                raise InvalidConfigError(f"unknown config key {key!r}")
            if isinstance(value, dict) and "kind" in value:
                if value["kind"] == "categorical":
                    kwargs[key] = ParamRange.categorical(value["items"])
                else:
                    kwargs[key] = ParamRange(kind=value["kind"],
                                             lo=value["lo"], hi=value["hi"])
            else:
                kwargs[key] = value
        return cls(**kwargs)


# Preset vocabulary.  ``psp-hdri`` is the baseline configuration; the five
# single-change presets each flip one knob against it, and ``psp-hdri-plus``
# combines all five changes.
PRESET_FLAGS = {
    "psp-hdri": {},
    "box-adapt": {"adaptation_mode": "box"},
    "box-kpt-adapt": {"adaptation_mode": "box+kpt"},
    "no-occluders": {"occluder_mode": "none"},
    "polyhaven-occluders": {"occluder_mode": "highquality-id"},
    "no-shadergraph": {"shadergraph_randomization": False},
    "smaa": {"smaa": True},
    "simple-anims": {"pose_mode": "simple"},
    "psp-hdri-plus": {
        "adaptation_mode": "box+kpt",
        "occluder_mode": "highquality-id",
        "shadergraph_randomization": False,
        "smaa": True,
        "pose_mode": "simple",
    },
}

PRESET_NAMES = tuple(PRESET_FLAGS)


def preset(name: str) -> RandomizerConfig:
    """Named configuration; raises UnknownPresetError for anything else."""
    try:
        overrides = PRESET_FLAGS[name]
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {name!r}; choose from {sorted(PRESET_FLAGS)}"
        ) from None
    return replace(RandomizerConfig(preset=name), **overrides)


def _sample_unit_disc(rng: np.random.Generator):
    radius = math.sqrt(rng.uniform(0.0, 1.0))
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return radius * math.cos(angle), radius * math.sin(angle)


def _sample_ball(rng: np.random.Generator, extent: float):
    radius = extent * rng.uniform(0.0, 1.0) ** (1.0 / 3.0)
    costh = rng.uniform(-1.0, 1.0)
    sinth = math.sqrt(max(0.0, 1.0 - costh * costh))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return (radius * sinth * math.cos(phi), radius * costh,
            radius * sinth * math.sin(phi))


def _generate_humans(cfg: RandomizerConfig, frame_seed: int,
                     library: PoseLibrary) -> tuple:
    count = cfg.human_count.sample(stream_for(frame_seed, "human_count"))
    eligible = library.eligible_pose_ids()
    humans = []
    for i in range(count):
        rng = substream(frame_seed, "humans", i)
        dx, dz = _sample_unit_disc(rng)
        root = (cfg.placement_extent * dx, 0.0, cfg.placement_extent * dz)
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        scale = cfg.human_scale.sample(rng)
        pose_rng = substream(frame_seed, "poses", i)
        pose_id = eligible[int(pose_rng.integers(0, len(eligible)))]
        joints_local = library.joints_of(pose_id)
        if cfg.pose_mode == "diverse":
            joints_local = perturb_joints(joints_local, library.perturbations,
                                          pose_rng)
        humans.append(build_skeleton(library, pose_id, joints_local, root,
                                     heading, scale))
    return tuple(humans)


def _generate_occluders(cfg: RandomizerConfig, frame_seed: int) -> tuple:
    if cfg.occluder_mode == "none":
        return ()
    count = cfg.occluder_count.sample(stream_for(frame_seed, "occluder_count"))
    texture_count = (HQ_TEXTURE_COUNT if cfg.occluder_mode == "highquality-id"
                     else PRIMITIVE_TEXTURE_COUNT)
    occluders = []
    for i in range(count):
        rng = substream(frame_seed, "occluders", i)
        shape = ("sphere", "capsule", "box")[int(rng.integers(0, 3))]
        center = _sample_ball(rng, cfg.placement_extent)
        yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        pitch = float(rng.uniform(-math.pi / 4.0, math.pi / 4.0))
        base = cfg.occluder_size.sample(rng)
        if shape == "sphere":
            size = (base / 2.0,)
        elif shape == "capsule":
            size = (base / 4.0, base / 2.0)
        else:
            u = rng.uniform(0.4, 1.0, size=3)
            size = tuple(float(base * ui / 2.0) for ui in u)
        texture_id = int(rng.integers(0, texture_count))
        occluders.append(OccluderPrimitive(
            shape=shape, center=center, yaw=yaw, pitch=pitch, size=size,
            texture_id=texture_id,
        ))
    return tuple(occluders)


def generate_scene(cfg: RandomizerConfig, master_seed: int, frame_index: int,
                   library: PoseLibrary | None = None) -> SceneDescription:
    """Generate one frame's scene; pure in (cfg, master_seed, frame_index)."""
    if frame_index < 0:
        raise InvalidConfigError("frame_index must be >= 0")
    if library is None:
        library = _default_library(cfg.pose_mode)
    elif library.mode != cfg.pose_mode:
        raise InvalidConfigError(
            f"library mode {library.mode!r} does not match config pose_mode "
            f"{cfg.pose_mode!r}")
    frame_seed = frame_seed_of(master_seed, frame_index)

    humans = _generate_humans(cfg, frame_seed, library)
    occluders = _generate_occluders(cfg, frame_seed)

    cam_rng = stream_for(frame_seed, "camera")
    camera = OrbitCamera(
        target=(0.0, 0.0, 0.0),
        radius=cfg.camera_radius.sample(cam_rng),
        azimuth=cfg.camera_azimuth.sample(cam_rng),
        elevation=cfg.camera_elevation.sample(cam_rng),
        vertical_fov=cfg.camera_fov.sample(cam_rng),
        image_width=cfg.image_width,
        image_height=cfg.image_height,
    )

    light_rng = stream_for(frame_seed, "lighting")
    lighting = LightingMeta(
        intensity=cfg.light_intensity.sample(light_rng),
        sun_time_of_day=cfg.time_of_day.sample(light_rng),
        sun_day_of_year=cfg.day_of_year.sample(light_rng),
    )

    hdri_rng = stream_for(frame_seed, "background")
    hdri_id = int(hdri_rng.integers(0, cfg.hdri_count))

    return SceneDescription(
        frame_index=frame_index,
        frame_seed=frame_seed,
        humans=humans,
        occluders=occluders,
        camera=camera,
        lighting_meta=lighting,
        background_hdri_id=hdri_id,
    )


_LIBRARY_CACHE: dict = {}


def _default_library(mode: str) -> PoseLibrary:
    if mode not in _LIBRARY_CACHE:
        _LIBRARY_CACHE[mode] = load_default_library(mode)
    return _LIBRARY_CACHE[mode]


def _human_sidecar_entries(cfg: RandomizerConfig, frame_seed: int,
                           library: PoseLibrary) -> list:
    """Re-derive the sampled per-human parameters for the sidecar record."""
    count = cfg.human_count.sample(stream_for(frame_seed, "human_count"))
    eligible = library.eligible_pose_ids()
    entries = []
    for i in range(count):
        rng = substream(frame_seed, "humans", i)
        dx, dz = _sample_unit_disc(rng)
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        scale = cfg.human_scale.sample(rng)
        pose_rng = substream(frame_seed, "poses", i)
        pose_id = eligible[int(pose_rng.integers(0, len(eligible)))]
        entries.append({
            "pose_id": pose_id,
            "root": [cfg.placement_extent * dx, 0.0, cfg.placement_extent * dz],
            "heading": heading,
            "scale": float(scale),
        })
    return entries


def scene_sidecar_obj(scene: SceneDescription, cfg: RandomizerConfig,
                      library: PoseLibrary | None = None) -> dict:
    """Sidecar document for one generated scene (canonical key order)."""
    if library is None:
        library = _default_library(cfg.pose_mode)
    cam = scene.camera
    return {
        "frame_index": scene.frame_index,
        "frame_seed": scene.frame_seed,
        "camera": {
            "target": [float(t) for t in cam.target],
            "radius": cam.radius,
            "azimuth": cam.azimuth,
            "elevation": cam.elevation,
            "vertical_fov": cam.vertical_fov,
            "image_width": cam.image_width,
            "image_height": cam.image_height,
        },
        "lighting_meta": {
            "intensity": scene.lighting_meta.intensity,
            "sun_time_of_day": scene.lighting_meta.sun_time_of_day,
            "sun_day_of_year": scene.lighting_meta.sun_day_of_year,
        },
        "background_hdri_id": scene.background_hdri_id,
        "human": _human_sidecar_entries(cfg, scene.frame_seed, library),
        "occluders": [
            {
                "shape": occ.shape,
                "center": [float(c) for c in occ.center],
                "yaw": occ.yaw,
                "pitch": occ.pitch,
                "size": [float(s) for s in occ.size],
                "texture_id": occ.texture_id,
            }
            for occ in scene.occluders
        ],
    }
