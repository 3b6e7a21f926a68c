"""Command-line surface composing the library into dataset workflows.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unparseable or invalid input files), 3 I/O error.  Every subcommand is a
thin composition of library calls; all randomness flows through ``--seed``,
so repeated runs with the same flags are byte-identical.
"""

import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import click

from synthpose import __version__
from synthpose.adapt import (
    ADAPT_MODES,
    DEFAULT_RANGES,
    NUM_AREA_RANGES,
    adapt_boxes,
    adapt_keypoints,
    compute_profile,
    load_profile,
    load_ranges,
    save_profile,
)
from synthpose.anneal import (
    AnnealingConfig,
    read_trace_csv,
    simulate,
    write_decision_log,
)
from synthpose.coco import (
    AnnotatedDataset,
    COCO_KEYPOINT_NAMES,
    MalformedFileError,
    NUM_KEYPOINTS,
    dumps_canonical,
    parse_dataset,
    write_dataset,
    write_sidecar,
)
from synthpose.labeler import label_frame
from synthpose.randomize import (
    InvalidConfigError,
    PRESET_NAMES,
    RandomizerConfig,
    UnknownPresetError,
    _default_library,
    generate_scene,
    preset,
    scene_sidecar_obj,
)
from synthpose.stats import (
    dataset_statistics,
    heatmap_csv,
    heatmap_summary_obj,
    pose_heatmaps,
)

JOBS_ENV = "SYNTHPOSE_JOBS"


@click.group()
@click.version_option(version=__version__, prog_name="synthpose")
def cli():
    """Synthetic human keypoint dataset toolkit."""


def _load_config(config_path: str | None, preset_name: str | None) \
        -> RandomizerConfig:
    if (config_path is None) == (preset_name is None):
        raise click.UsageError("exactly one of --config/--preset is required")
    if preset_name is not None:
        return preset(preset_name)
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedFileError("config root must be a JSON object")
    return RandomizerConfig.from_obj(obj)


def _frame_payloads(cfg: RandomizerConfig, master_seed: int, indices):
    """Generate and label a batch of frames (runs inside worker processes)."""
    library = _default_library(cfg.pose_mode)
    out = []
    for frame_index in indices:
        scene = generate_scene(cfg, master_seed, frame_index, library)
        sidecar = scene_sidecar_obj(scene, cfg, library)
        image, annotations = label_frame(scene, frame_index + 1)
        out.append((frame_index, sidecar, image, annotations))
    return out


def _split_chunks(n_frames: int, jobs: int):
    """Contiguous, near-equal index chunks; at most one per job."""
    chunks = []
    base, rem = divmod(n_frames, jobs)
    start = 0
    for j in range(jobs):
        size = base + (1 if j < rem else 0)
        if size:
            chunks.append(range(start, start + size))
        start += size
    return chunks


@cli.command()
@click.option("--config", "config_path", default=None,
              help="Randomizer config JSON file.")
@click.option("--preset", "preset_name", default=None,
              help=f"Named preset, one of: {', '.join(PRESET_NAMES)}.")
@click.option("--seed", type=int, required=True, help="Master seed.")
@click.option("--frames", type=int, required=True,
              help="Number of frames to generate.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False), help="Output directory.")
@click.option("--jobs", type=int, default=None,
              help=f"Worker processes (default ${JOBS_ENV} or 1). "
                   "Never changes output bytes.")
def generate(config_path, preset_name, seed, frames, out_dir, jobs):
    """Generate a labeled synthetic dataset."""
    cfg = _load_config(config_path, preset_name)
    if frames < 0:
        raise click.UsageError("--frames must be >= 0")
    if jobs is None:
        jobs = int(os.environ.get(JOBS_ENV, "1"))
    if jobs < 1:
        raise click.UsageError("--jobs must be >= 1")

    jobs = min(jobs, frames) if frames else 1
    if jobs <= 1:
        payloads = _frame_payloads(cfg, seed, range(frames))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_frame_payloads, cfg, seed, chunk)
                       for chunk in _split_chunks(frames, jobs)]
            payloads = [item for fut in futures for item in fut.result()]
    payloads.sort(key=lambda item: item[0])

    # Merge in frame order: image ids are frame_index + 1, annotation ids
    # run sequentially across the whole dataset.
    images = []
    annotations = []
    next_id = 1
    for _, _, image, frame_anns in payloads:
        images.append(image)
        for ann in frame_anns:
            annotations.append(replace(ann, id=next_id))
            next_id += 1

    out = Path(out_dir)
    scenes_dir = out / "scenes"
    scenes_dir.mkdir(parents=True, exist_ok=True)
    dataset = AnnotatedDataset(images=tuple(images),
                               annotations=tuple(annotations))
    write_dataset(dataset, out / "annotations.json")
    for frame_index, sidecar, _, _ in payloads:
        write_sidecar(sidecar, scenes_dir / f"frame_{frame_index:06d}.json")

    config_obj = cfg.to_obj()
    manifest = {
        "toolkit_version": __version__,
        "master_seed": seed,
        "frames": frames,
        "config": config_obj,
        "config_sha256": hashlib.sha256(
            dumps_canonical(config_obj).encode("utf-8")).hexdigest(),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(manifest, indent=2))
        fh.write("\n")
    click.echo(f"wrote {frames} frames, {len(annotations)} annotations "
               f"to {out}")


@cli.command()
@click.option("--reference", "reference_path", required=True,
              help="Reference dataset (COCO keypoint JSON).")
@click.option("--ranges", "ranges_path", default=None,
              help="Optional JSON array of six area-bucket starts.")
@click.option("--out", "out_path", required=True,
              help="Profile JSON output path.")
def profile(reference_path, ranges_path, out_path):
    """Measure a reference dataset's labeling statistics."""
    ranges = load_ranges(ranges_path) if ranges_path else DEFAULT_RANGES
    dataset = parse_dataset(reference_path)
    prof = compute_profile(dataset, ranges)
    save_profile(prof, out_path)
    click.echo(f"profiled {len(dataset.annotations)} annotations; "
               f"min_area={prof.min_area}, "
               f"min_area_ratio={prof.min_area_ratio:.8f}")


@cli.command("adapt")
@click.option("--input", "input_path", required=True,
              help="Dataset to adapt (COCO keypoint JSON).")
@click.option("--profile", "profile_path", required=True,
              help="Reference profile JSON.")
@click.option("--mode", type=click.Choice(ADAPT_MODES), default="box+kpt",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for surplus-keypoint selection.")
@click.option("--out", "out_path", required=True,
              help="Adapted dataset output path.")
def adapt_cmd(input_path, profile_path, mode, seed, out_path):
    """Filter a dataset's labels to match a reference profile."""
    dataset = parse_dataset(input_path)
    prof = load_profile(profile_path)

    boxed = adapt_boxes(dataset, prof)
    removed_boxes = len(dataset.annotations) - len(boxed.annotations)
    result = boxed
    removed_kpts = [0] * NUM_AREA_RANGES
    if mode == "box+kpt":
        result = adapt_keypoints(boxed, prof, seed=seed)
        after = {a.id: a for a in result.annotations}
        for ann in boxed.annotations:
            r = prof.ranges.index_of(float(ann.area))
            removed_kpts[r] += ann.num_keypoints - after[ann.id].num_keypoints

    write_dataset(result, out_path)
    click.echo(f"removed boxes: {removed_boxes}")
    for r in range(NUM_AREA_RANGES):
        start = prof.ranges.starts[r]
        click.echo(f"removed keypoints[range {r} (>= {start:g} px^2)]: "
                   f"{removed_kpts[r]}")


@cli.command()
@click.option("--input", "input_path", required=True,
              help="Dataset to summarize (COCO keypoint JSON).")
@click.option("--ranges", "ranges_path", default=None,
              help="Optional JSON array of six area-bucket starts.")
@click.option("--out", "out_path", required=True,
              help="Statistics report JSON output path.")
def stats(input_path, ranges_path, out_path):
    """Write a dataset statistics report."""
    ranges = load_ranges(ranges_path) if ranges_path else DEFAULT_RANGES
    dataset = parse_dataset(input_path)
    report = dataset_statistics(dataset, ranges)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(report, indent=2))
        fh.write("\n")
    click.echo(f"summarized {report['annotations']} annotations "
               f"across {report['images']} images")


@cli.command()
@click.option("--input", "input_path", required=True,
              help="Dataset to histogram (COCO keypoint JSON).")
@click.option("--out-dir", "out_dir", required=True,
              type=click.Path(file_okay=False),
              help="Directory for per-keypoint CSV grids + summary JSON.")
@click.option("--extent", type=float, default=3.0, show_default=True,
              help="Grid half-width in torso units.")
@click.option("--resolution", type=int, default=101, show_default=True,
              help="Bins per axis (odd).")
def heatmaps(input_path, out_dir, extent, resolution):
    """Write normalized pose-space keypoint heatmaps."""
    dataset = parse_dataset(input_path)
    grid = pose_heatmaps(dataset, extent=extent, resolution=resolution)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, name in enumerate(COCO_KEYPOINT_NAMES):
        path = out / f"heatmap_{k:02d}_{name}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(heatmap_csv(grid, k))
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(heatmap_summary_obj(grid), indent=2))
        fh.write("\n")
    click.echo(f"accumulated {grid.instance_count} skeletons into "
               f"{NUM_KEYPOINTS} grids")


@cli.command("anneal-sim")
@click.option("--trace", "trace_path", required=True,
              help="CSV trace with columns epoch,metric[,tag].")
@click.option("--out", "out_path", default=None,
              help="Decision log path (JSON lines); default stdout.")
@click.option("--lr", type=float, default=0.02, show_default=True)
@click.option("--patience", type=int, default=38, show_default=True)
@click.option("--epsilon", type=float, default=5.0, show_default=True)
@click.option("--warmup", type=int, default=1000, show_default=True)
@click.option("--max-reductions", type=int, default=3, show_default=True)
@click.option("--factor", type=float, default=10.0, show_default=True)
@click.option("--eval-period", type=int, default=2, show_default=True)
def anneal_sim(trace_path, out_path, lr, patience, epsilon, warmup,
               max_reductions, factor, eval_period):
    """Replay a metric trace through the annealing scheduler."""
    try:
        config = AnnealingConfig(
            initial_lr=lr,
            initial_patience=patience,
            initial_epsilon=epsilon,
            warmup_iterations=warmup,
            max_reductions=max_reductions,
            reduction_factor=factor,
            eval_period_epochs=eval_period,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    trace = read_trace_csv(trace_path)
    decisions = simulate(config, trace)
    if out_path:
        write_decision_log(decisions, out_path)
    else:
        for decision in decisions:
            click.echo(json.dumps(decision.to_obj(), ensure_ascii=False))
    reductions = sum(1 for d in decisions
                     if d.action == "reduce_and_restore")
    stopped = any(d.action == "stop" for d in decisions)
    click.echo(f"replayed {len(decisions)} observations: "
               f"{reductions} reductions, "
               f"{'stopped' if stopped else 'still training'}", err=True)


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (InvalidConfigError, UnknownPresetError) as exc:
        # KeyError str() wraps its message in quotes; unwrap for display.
        message = exc.args[0] if exc.args else str(exc)
        click.echo(f"error: {message}", err=True)
        return 1
    except ValueError as exc:
        # Malformed files, schema violations, bad trace rows, and the other
        # typed data errors all derive from ValueError.
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
