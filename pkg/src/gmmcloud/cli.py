"""Command-line interface.

Every command is deterministic: a fixed invocation writes byte-identical
outputs on every run. Commands that draw random numbers take --seed.
"""

from __future__ import annotations

import os

import click
import numpy as np

from .em import FitConfig
from .embedding import inflated_bounds, make_probe_set
from .geodesics import DEFAULT_TS, InterpolationConfig, interpolate_point_clouds
from .io import (
    FitMetadata,
    emit_svg,
    emit_svg_filmstrip,
    format_aic_table,
    load_embeddings,
    load_model,
    load_probe_set,
    read_point_cloud,
    save_embeddings,
    save_model,
    save_probe_set,
    write_point_cloud,
)
from .model import PointCloud
from .pipeline import (
    ExperimentConfig,
    format_report,
    run_generation_classification,
)
from .sampling import RngStream, generate_point_cloud
from .selection import build_ensemble, default_candidate_ks
from .shapes import CLASS_PARAMETERS, add_outliers, make_bent_tube, tube_spec_for_class
from .embedding import embed as embed_model
from .embedding import evaluate, knn_classify

FRAME_COLOR = "#1f6fb4"


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated integer list, got {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated number list, got {text!r}")


@click.group()
def main():
    """Fit, sample, interpolate, embed, and classify 3D point-cloud shapes."""


@main.command()
@click.argument("cloud_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--ks", default=None, help="Comma-separated candidate component counts.")
@click.option("--seed", default=0, show_default=True, help="Fit seed.")
@click.option("--tol", default=1e-6, show_default=True, help="EM relative tolerance.")
@click.option("--center", is_flag=True, help="Subtract the centroid before fitting.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Output model file (JSON).")
def fit(cloud_path, ks, seed, tol, center, out):
    """Fit an AIC-weighted mixture ensemble to a point cloud."""
    cloud = read_point_cloud(cloud_path)
    offset = None
    if center:
        offset = cloud.points.mean(axis=0)
        cloud = PointCloud(cloud.points - offset, label=cloud.label)
    candidate_ks = _parse_ints(ks) if ks else default_candidate_ks(len(cloud))
    config = FitConfig(seed=seed, rel_tolerance=tol)
    ensemble, table = build_ensemble(cloud, candidate_ks, config)
    metadata = FitMetadata(
        seed=seed,
        rel_tolerance=tol,
        max_iterations=config.max_iterations,
        kmeans_restarts=config.kmeans_restarts,
        candidate_ks=tuple(sorted(set(candidate_ks))),
        training_n=len(cloud),
        label=cloud.label,
        center_offset=tuple(offset.tolist()) if offset is not None else None,
    )
    save_model(out, ensemble, table, metadata)
    click.echo(format_aic_table(table))
    click.echo(f"wrote {out}")


@main.command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", default=None, type=int,
              help="Points to draw (default: training cloud size).")
@click.option("--seed", default=0, show_default=True, help="Sampling stream seed.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Output cloud file (.xyz or .csv).")
def sample(model_path, n, seed, out):
    """Draw a new point cloud from a fitted model file."""
    loaded = load_model(model_path)
    count = n if n is not None else loaded.metadata.training_n
    cloud = generate_point_cloud(loaded.ensemble, count, RngStream(seed, 0),
                                 label=loaded.metadata.label)
    if loaded.metadata.center_offset is not None:
        cloud = PointCloud(cloud.points + np.array(loaded.metadata.center_offset),
                           label=cloud.label)
    write_point_cloud(cloud, out)
    click.echo(f"wrote {count} points to {out}")


@main.command()
@click.argument("cloud_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("cloud_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--ts", default=",".join(str(t) for t in DEFAULT_TS), show_default=True,
              help="Comma-separated interpolation parameters in [0, 1].")
@click.option("--n", default=None, type=int,
              help="Points per frame (default: size of CLOUD_A).")
@click.option("--ks", default=None, help="Comma-separated candidate component counts.")
@click.option("--seed", default=0, show_default=True, help="Frame sampling seed.")
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False),
              help="Output directory for frames and filmstrip.")
def interpolate(cloud_a, cloud_b, ts, n, ks, seed, out):
    """Morph between two clouds along the product-manifold geodesic."""
    x = read_point_cloud(cloud_a)
    y = read_point_cloud(cloud_b)
    config = InterpolationConfig(
        candidate_ks=_parse_ints(ks) if ks else None,
        fit=FitConfig(seed=seed),
        seed=seed,
    )
    result = interpolate_point_clouds(x, y, _parse_floats(ts), n, config)
    os.makedirs(out, exist_ok=True)
    panels = []
    for i, (t, frame) in enumerate(zip(result.ts, result.frames)):
        frame_path = os.path.join(out, f"frame_{i:02d}_t{t:g}.xyz")
        write_point_cloud(frame, frame_path)
        panels.append((f"t={t:g}", frame, FRAME_COLOR))
        click.echo(f"wrote {frame_path}")
    strip_path = os.path.join(out, "filmstrip.svg")
    emit_svg_filmstrip(panels, strip_path)
    click.echo(f"wrote {strip_path}")


@main.command()
@click.option("--class", "class_label", required=True,
              type=click.Choice(sorted(CLASS_PARAMETERS)),
              help="Which stock shape class to draw.")
@click.option("--n", default=600, show_default=True, help="Points per cloud.")
@click.option("--seed", default=0, show_default=True, help="Shape sampling seed.")
@click.option("--outliers", default=0.0, show_default=True,
              help="Fraction of points replaced by uniform box outliers.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Output cloud file (.xyz or .csv).")
def synth(class_label, n, seed, outliers, out):
    """Generate a synthetic bent-tube cloud of a stock class."""
    cloud = make_bent_tube(tube_spec_for_class(class_label, n_points=n), seed)
    if outliers > 0.0:
        bounds = inflated_bounds([cloud], margin_fraction=0.0)
        cloud = add_outliers(cloud, outliers, bounds, seed + 1)
    write_point_cloud(cloud, out)
    click.echo(f"wrote {len(cloud)} points to {out}")


@main.command()
@click.argument("cloud_paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, help="Probe placement seed.")
@click.option("--count", default=1000, show_default=True, help="Number of probes.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Output probe-set file (JSON).")
def probes(cloud_paths, seed, count, out):
    """Draw a shared probe set over the bounding box of the given clouds."""
    clouds = [read_point_cloud(p) for p in cloud_paths]
    save_probe_set(out, make_probe_set(clouds, seed, count))
    click.echo(f"wrote {count} probes to {out}")


@main.command()
@click.argument("model_paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--probes", "probes_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Probe-set file.")
@click.option("--seed", default=0, show_default=True,
              help="Accepted for interface uniformity; embedding is deterministic.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False),
              help="Output embeddings file (JSON).")
def embed(model_paths, probes_path, seed, out):
    """Embed fitted models on the unit hypersphere via probe densities."""
    probe_set = load_probe_set(probes_path)
    entries = []
    for path in model_paths:
        loaded = load_model(path)
        entries.append((embed_model(loaded.ensemble, probe_set),
                        loaded.metadata.label, os.path.basename(path)))
    save_embeddings(out, entries)
    click.echo(f"wrote {len(entries)} embeddings to {out}")


@main.command()
@click.option("--train", "train_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Embeddings file with labels.")
@click.option("--test", "test_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Embeddings file to classify.")
@click.option("--positive", default="demented", show_default=True,
              help="Label treated as the positive class in the metrics.")
@click.option("--seed", default=0, show_default=True,
              help="Accepted for interface uniformity; classification is deterministic.")
def classify(train_path, test_path, positive, seed):
    """1-NN classify embeddings and report accuracy per class."""
    train = [(emb, label) for emb, label, _ in load_embeddings(train_path)
             if label is not None]
    if not train:
        raise click.ClickException("training embeddings carry no labels")
    test = load_embeddings(test_path)
    pairs = []
    for emb, label, source in test:
        predicted = knn_classify(train, emb)
        click.echo(f"{source or '<unnamed>'}: predicted {predicted}")
        if label is not None:
            pairs.append((label, predicted))
    if pairs:
        metrics = evaluate(pairs, positive)
        click.echo(
            f"accuracy {metrics.accuracy:.4f}  sensitivity {metrics.sensitivity:.4f}  "
            f"specificity {metrics.specificity:.4f}  (positive class: {positive})")
    else:
        click.echo("no labeled test embeddings; metrics skipped")


@main.command("eval-paper-pipeline")
@click.option("--seeds", default="0,1,2,3,4", show_default=True,
              help="Comma-separated probe-set seeds to average over.")
@click.option("--seed", default=0, show_default=True,
              help="Base seed for shapes, fits, and generation.")
@click.option("--bases", default=5, show_default=True, help="Base shapes per class.")
@click.option("--counts", default="33,36", show_default=True,
              help="Generated cloud counts: demented,nondemented.")
@click.option("--n-points", default=600, show_default=True, help="Points per cloud.")
@click.option("--ks", default="2,4,8", show_default=True,
              help="Comma-separated candidate component counts.")
def eval_paper_pipeline(seeds, seed, bases, counts, n_points, ks):
    """Run the synthetic generate-then-classify benchmark end to end."""
    demented_count, nondemented_count = _parse_ints(counts)
    config = ExperimentConfig(
        base_shapes_per_class=bases,
        generated_counts={"demented": demented_count, "nondemented": nondemented_count},
        n_points=n_points,
        candidate_ks=_parse_ints(ks),
        fit=FitConfig(seed=seed),
        seed=seed,
        probe_seeds=_parse_ints(seeds),
    )
    click.echo(format_report(run_generation_classification(config)))


if __name__ == "__main__":
    main()
