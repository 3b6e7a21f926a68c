from __future__ import annotations

import sys
from pathlib import Path

import pytest

# Make tests/ importable as plain modules (_fixtures, _oracles) regardless of
# how pytest was invoked.
sys.path.insert(0, str(Path(__file__).resolve().parent))

from synthpose.randomize import RandomizerConfig, generate_scene, preset


@pytest.fixture(scope="session")
def default_scenes():
    """Thirty default-preset scenes shared by geometry tests."""
    cfg = preset("psp-hdri")
    return [generate_scene(cfg, master_seed=42, frame_index=i) for i in range(30)]


@pytest.fixture(scope="session")
def far_camera_scenes():
    """Scenes whose camera keeps its distance; used by bbox comparisons."""
    from dataclasses import replace

    from synthpose.randomize import ParamRange

    cfg = replace(preset("psp-hdri"), camera_radius=ParamRange.uniform(6.0, 12.0))
    return [generate_scene(cfg, master_seed=11, frame_index=i) for i in range(30)]


@pytest.fixture()
def tiny_config():
    """Small, fast config: one human, one occluder, fixed camera shell."""
    from synthpose.randomize import ParamRange

    return RandomizerConfig(
        human_count=ParamRange.discrete(1, 1),
        occluder_count=ParamRange.discrete(1, 1),
        camera_radius=ParamRange.uniform(5.0, 7.0),
    )
