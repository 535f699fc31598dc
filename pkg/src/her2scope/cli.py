"""Batch front end: process a directory of FOV images as one slide.

Also drives the threshold calibration run (--calibrate) and the per-stage
benchmark (--bench). Exit codes: 0 success, 1 fatal, 2 partial (some FOVs
failed).
"""

from __future__ import annotations

import csv
import json
import statistics
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .calibrate import calibrate_thresholds, load_fixture_set
from .config import load_config
from .errors import Her2ScopeError, IndeterminateScoreError
from .overlay import overlay_geometry, render_overlay_png
from .pipeline import OBJECTIVE_PIXEL_SIZES, process_fov
from .raster import load_image
from .scoring import aggregate, get_rule_table, score

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff"}


def _collect_inputs(input_dir: Path, objective: str, manifest: Path | None):
    """Yields (name, path, objective) sorted by filename."""
    if manifest is not None:
        with open(manifest, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        entries = [(row[0], input_dir / row[0], row[1].strip()) for row in rows]
    else:
        entries = [
            (p.name, p, objective)
            for p in sorted(input_dir.iterdir())
            if p.suffix.lower() in _IMAGE_SUFFIXES
        ]
    return sorted(entries)


@click.command(name="her2scope")
@click.option("--input", "input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--output", "output_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("./her2scope-out"))
@click.option("--objective", type=click.Choice(sorted(OBJECTIVE_PIXEL_SIZES)), default="20x")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="CSV of filename,objective for mixed-magnification batches")
@click.option("--t-weak", type=float, default=None)
@click.option("--t-intense", type=float, default=None)
@click.option("--d", "d_um", type=float, default=None, help="membrane dilation radius in micrometers")
@click.option("--rules", default="breast")
@click.option("--overlay/--no-overlay", default=False)
@click.option("--workers", type=int, default=8)
@click.option("--bench", is_flag=True, help="report per-stage timings instead of writing results")
@click.option("--calibrate", "calibrate_flag", is_flag=True,
              help="treat --input as a fixture set and suggest thresholds")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
def main(input_dir, output_dir, objective, manifest, t_weak, t_intense, d_um, rules,
         overlay, workers, bench, calibrate_flag, config_path):
    """Score one slide from a directory of FOV images."""
    try:
        config = load_config(config_path)
        overrides = {
            name: value
            for name, value in (("t_weak", t_weak), ("t_intense", t_intense), ("d", d_um))
            if value is not None
        }
        membrane = replace(config.membrane, **overrides)
        rule_table = get_rule_table(rules)

        if calibrate_flag:
            sys.exit(_run_calibrate(input_dir, output_dir, membrane))

        entries = _collect_inputs(input_dir, objective, manifest)
        if not entries:
            click.echo("error: no input images found", err=True)
            sys.exit(1)

        def run_one(entry):
            name, path, obj = entry
            image = load_image(path, OBJECTIVE_PIXEL_SIZES[obj])
            heatmap = path.with_suffix(".hmp")
            comp = process_fov(
                image,
                config.detector,
                membrane,
                heatmap_path=heatmap if heatmap.exists() else None,
            )
            return name, image, comp

        results = {}
        failures = []
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for entry, outcome in zip(entries, pool.map(lambda e: _guarded(run_one, e), entries)):
                name = entry[0]
                if isinstance(outcome, Exception):
                    failures.append((name, outcome))
                    click.echo(f"warning: {name} failed: {outcome}", err=True)
                else:
                    results[name] = outcome

        if not results:
            click.echo("error: no FOV could be processed", err=True)
            sys.exit(1)

        if bench:
            _print_bench(results)
            sys.exit(0 if not failures else 2)

        output_dir.mkdir(parents=True, exist_ok=True)
        fov_counts = {}
        fov_entries = []
        for name in sorted(results):
            _, image, comp = results[name]
            fov_counts[name] = comp.counts
            geometry = overlay_geometry(comp, image.pixel_size)
            fov_json = {
                "fov_id": name,
                "counts": comp.counts.as_dict(),
                "total": comp.counts.total,
                "nuclei": [[int(x), int(y)] for x, y in comp.nuclei.points],
                "overlay": geometry,
                "timings": {
                    "detection": comp.timings.detection,
                    "membrane": comp.timings.membrane,
                    "classification": comp.timings.classification,
                    "total": comp.timings.total,
                },
            }
            stem = Path(name).stem
            (output_dir / f"{stem}.json").write_text(_stable_json(fov_json))
            if overlay:
                render_overlay_png(image, geometry).save(output_dir / f"{stem}.overlay.png")
            fov_entries.append({
                "fov_id": name,
                "included": True,
                "counts": comp.counts.as_dict(),
                "total": comp.counts.total,
            })

        report = {"rule_table": rules, "included_fovs": sorted(results), "fovs": fov_entries}
        try:
            slide = aggregate(fov_counts)
            result = score(slide, rule_table)
            report.update(
                status="scored",
                score={
                    "value": result.value,
                    "category": result.category,
                    "triggering_proportion": result.triggering_proportion,
                    "rule_id": result.rule_id,
                },
                counts=slide.counts.as_dict(),
                total=slide.total,
                proportions=slide.proportions(),
                warnings=list(result.warnings),
            )
        except IndeterminateScoreError as exc:
            report.update(status="indeterminate", score=None, warnings=[str(exc)])
        (output_dir / "report.json").write_text(_stable_json(report))
        click.echo(f"slide: {report['status']}" + (f" {report['score']['value']}" if report.get("score") else ""))
        sys.exit(0 if not failures else 2)
    except Her2ScopeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _guarded(fn, arg):
    try:
        return fn(arg)
    except Exception as exc:  # per-file failures keep the run going
        return exc


def _stable_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _print_bench(results) -> None:
    stages = {"detection": [], "membrane": [], "classification": [], "total": []}
    for _, _, comp in results.values():
        stages["detection"].append(comp.timings.detection)
        stages["membrane"].append(comp.timings.membrane)
        stages["classification"].append(comp.timings.classification)
        stages["total"].append(comp.timings.total)
    click.echo(f"{'stage':<22}{'mean (s)':>10}{'median (s)':>12}{'p90 (s)':>10}")
    for label, key in (
        ("Total", "total"),
        ("Nucleus Detection", "detection"),
        ("Membrane Description", "membrane"),
        ("Cell Classification", "classification"),
    ):
        xs = stages[key]
        p90 = float(np.percentile(xs, 90))
        click.echo(f"{label:<22}{statistics.mean(xs):>10.3f}{statistics.median(xs):>12.3f}{p90:>10.3f}")


def _run_calibrate(input_dir: Path, output_dir: Path, membrane) -> int:
    fixtures = load_fixture_set(input_dir)
    result = calibrate_thresholds(fixtures, base_params=membrane)
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"best accuracy {result.accuracy:.4f} at t_weak={result.t_weak}, t_intense={result.t_intense}")
    click.echo(result.config_fragment(), nl=False)
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "calibration.txt").write_text(result.config_fragment())
    return 0


if __name__ == "__main__":
    main()
