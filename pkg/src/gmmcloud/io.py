"""File formats: XYZ/CSV point clouds, JSON model and probe files, SVG.

XYZ holds one whitespace-separated "x y z" triple per line; '#' starts a
comment and a "# label: <tag>" comment round-trips PointCloud.label.
CSV holds an optional header row and takes the first three numeric
columns. Model, probe-set, and embedding files are JSON trees with an
explicit schema_version; floats serialize with the shortest decimal
representation that parses back to the identical double, so every
round-trip is exact. All writers replace the target atomically and are
byte-deterministic for identical inputs.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .embedding import ProbeSet, SphereEmbedding
from .model import (
    EnsembleMember,
    GaussianComponent,
    Gmm,
    GmmEnsemble,
    PointCloud,
)
from .selection import AicRow, AicTable

SCHEMA_VERSION = "1"

_LABEL_COMMENT = "# label:"


class FileFormatError(ValueError):
    """A file does not parse under its declared format."""


def _atomic_write_text(path: str, text: str):
    if not path:
        raise ValueError("output path must be non-empty")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _infer_format(path: str, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("xyz", "csv"):
            raise ValueError(f"unknown point-cloud format {fmt!r}")
        return fmt
    suffix = os.path.splitext(path)[1].lower()
    return "csv" if suffix == ".csv" else "xyz"


def read_point_cloud(path: str, fmt: str | None = None) -> PointCloud:
    """Load a cloud from an XYZ or CSV file (format inferred from suffix)."""
    fmt = _infer_format(path, fmt)
    with open(path, "r") as handle:
        text = handle.read()
    if fmt == "xyz":
        return _parse_xyz(text, path)
    return _parse_csv(text, path)


def _parse_xyz(text: str, path: str) -> PointCloud:
    rows = []
    label = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lower().startswith(_LABEL_COMMENT):
                label = line[len(_LABEL_COMMENT):].strip() or None
            continue
        fields = line.split()
        if len(fields) != 3:
            raise FileFormatError(
                f"{path}: line {lineno}: expected 3 coordinates, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise FileFormatError(
                f"{path}: line {lineno}: non-numeric coordinate in {line!r}") from None
    if not rows:
        raise FileFormatError(f"{path}: no points found")
    return PointCloud(np.array(rows), label=label)


def _parse_csv(text: str, path: str) -> PointCloud:
    reader = list(csv.reader(text.splitlines()))
    rows = []
    numeric_cols = None
    for lineno, record in enumerate(reader, start=1):
        if not record or all(not f.strip() for f in record):
            continue
        if numeric_cols is None:
            cols = []
            for i, f in enumerate(record):
                try:
                    float(f)
                    cols.append(i)
                except ValueError:
                    pass
            if len(cols) < 3:
                continue  # header row
            numeric_cols = cols[:3]
        try:
            rows.append([float(record[i]) for i in numeric_cols])
        except (ValueError, IndexError):
            raise FileFormatError(
                f"{path}: line {lineno}: expected numeric columns {numeric_cols}") from None
    if not rows:
        raise FileFormatError(f"{path}: no points found")
    return PointCloud(np.array(rows))


def write_point_cloud(cloud: PointCloud, path: str, fmt: str | None = None):
    """Write a cloud as XYZ or CSV, atomically and byte-deterministically."""
    fmt = _infer_format(path, fmt)
    lines = []
    # native floats repr as the shortest decimal that parses back exactly
    if fmt == "xyz":
        if cloud.label is not None:
            lines.append(f"{_LABEL_COMMENT} {cloud.label}")
        for x, y, z in cloud.points.tolist():
            lines.append(f"{x!r} {y!r} {z!r}")
    else:
        lines.append("x,y,z")
        for x, y, z in cloud.points.tolist():
            lines.append(f"{x!r},{y!r},{z!r}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class FitMetadata:
    """Provenance a model file carries alongside the ensemble."""

    seed: int
    rel_tolerance: float
    max_iterations: int
    kmeans_restarts: int
    candidate_ks: tuple[int, ...]
    training_n: int
    label: str | None = None
    center_offset: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class ModelFile:
    schema_version: str
    ensemble: GmmEnsemble
    aic_table: AicTable
    metadata: FitMetadata


def _gmm_to_obj(model: Gmm):
    return {
        "weights": [c.weight for c in model.components],
        "means": [c.mean.tolist() for c in model.components],
        "covariances": [c.covariance.tolist() for c in model.components],
    }


def _gmm_from_obj(obj) -> Gmm:
    return Gmm(tuple(
        GaussianComponent(w, m, c)
        for w, m, c in zip(obj["weights"], obj["means"], obj["covariances"])
    ))


def save_model(path: str, ensemble: GmmEnsemble, aic_table: AicTable,
               metadata: FitMetadata):
    obj = {
        "schema_version": SCHEMA_VERSION,
        "kind": "model_file",
        "ensemble": [
            {"p": m.weight, "model": _gmm_to_obj(m.model)} for m in ensemble.members
        ],
        "aic_table": [
            {"k": r.k, "aic": r.aic, "normalized": r.normalized, "kept": r.kept}
            for r in aic_table.rows
        ],
        "metadata": {
            "seed": metadata.seed,
            "rel_tolerance": metadata.rel_tolerance,
            "max_iterations": metadata.max_iterations,
            "kmeans_restarts": metadata.kmeans_restarts,
            "candidate_ks": list(metadata.candidate_ks),
            "training_n": metadata.training_n,
            "label": metadata.label,
            "center_offset": (list(metadata.center_offset)
                              if metadata.center_offset is not None else None),
        },
    }
    _atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def _check_schema(obj, path: str, kind: str):
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FileFormatError(
            f"{path}: schema_version {version!r} not supported, expected {SCHEMA_VERSION!r}")
    if obj.get("kind") != kind:
        raise FileFormatError(f"{path}: expected a {kind} file, got {obj.get('kind')!r}")


def load_model(path: str) -> ModelFile:
    with open(path, "r") as handle:
        obj = json.load(handle)
    _check_schema(obj, path, "model_file")
    ensemble = GmmEnsemble(tuple(
        EnsembleMember(m["p"], _gmm_from_obj(m["model"])) for m in obj["ensemble"]
    ))
    table = AicTable(tuple(
        AicRow(r["k"], r["aic"], r["normalized"], r["kept"]) for r in obj["aic_table"]
    ))
    meta = obj["metadata"]
    offset = meta.get("center_offset")
    metadata = FitMetadata(
        seed=meta["seed"],
        rel_tolerance=meta["rel_tolerance"],
        max_iterations=meta["max_iterations"],
        kmeans_restarts=meta["kmeans_restarts"],
        candidate_ks=tuple(meta["candidate_ks"]),
        training_n=meta["training_n"],
        label=meta.get("label"),
        center_offset=tuple(offset) if offset is not None else None,
    )
    return ModelFile(obj["schema_version"], ensemble, table, metadata)


def save_probe_set(path: str, probes: ProbeSet):
    obj = {
        "schema_version": SCHEMA_VERSION,
        "kind": "probe_set",
        "seed": probes.seed,
        "bounds": {"lo": probes.bounds[0].tolist(), "hi": probes.bounds[1].tolist()},
        "probes": probes.probes.tolist(),
    }
    _atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def load_probe_set(path: str) -> ProbeSet:
    with open(path, "r") as handle:
        obj = json.load(handle)
    _check_schema(obj, path, "probe_set")
    bounds = np.array([obj["bounds"]["lo"], obj["bounds"]["hi"]])
    return ProbeSet(np.array(obj["probes"]), bounds, obj["seed"])


def save_embeddings(path: str, entries):
    """entries: sequence of (SphereEmbedding, label or None, source name)."""
    obj = {
        "schema_version": SCHEMA_VERSION,
        "kind": "embeddings",
        "entries": [
            {"label": label, "source": source, "coords": emb.coords.tolist()}
            for emb, label, source in entries
        ],
    }
    _atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def load_embeddings(path: str) -> list[tuple[SphereEmbedding, str | None, str]]:
    with open(path, "r") as handle:
        obj = json.load(handle)
    _check_schema(obj, path, "embeddings")
    return [
        (SphereEmbedding(np.array(e["coords"])), e.get("label"), e.get("source", ""))
        for e in obj["entries"]
    ]


def format_aic_table(table: AicTable) -> str:
    lines = [f"{'K':>4}  {'AIC':>16}  {'weight':>12}  kept"]
    for r in table.rows:
        lines.append(f"{r.k:>4}  {r.aic:>16.6f}  {r.normalized:>12.6f}  {'yes' if r.kept else 'no'}")
    return "\n".join(lines)


_PROJECTION_AXES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _svg_panel(lines: list[str], points2d: np.ndarray, color: str, lo, hi,
               radius: float, x_shift: float):
    for px, py in points2d:
        cx = x_shift + (px - lo[0])
        cy = hi[1] - py
        lines.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius)}" fill="{color}"/>')


def _projection_bounds(point_sets):
    stacked = np.vstack(point_sets)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    span = float(max(hi - lo))
    pad = 0.04 * span if span > 0.0 else 1.0
    return lo - pad, hi + pad


def emit_svg(clouds, path: str, projection: str = "xy"):
    """Scatter one or more (cloud, color) pairs into an equal-aspect SVG."""
    clouds = list(clouds)
    if not clouds:
        raise ValueError("need at least one cloud to plot")
    if projection not in _PROJECTION_AXES:
        raise ValueError(f"projection must be one of {sorted(_PROJECTION_AXES)}")
    axes = list(_PROJECTION_AXES[projection])
    planar = [cloud.points[:, axes] for cloud, _ in clouds]
    lo, hi = _projection_bounds(planar)
    width, height = hi[0] - lo[0], hi[1] - lo[1]
    radius = 0.006 * float(max(width, height))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(width)} {_fmt(height)}" '
        f'width="640" height="{_fmt(640.0 * height / width)}">',
    ]
    for pts, (_, color) in zip(planar, clouds):
        _svg_panel(lines, pts, color, lo, hi, radius, 0.0)
    lines.append("</svg>")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def emit_svg_filmstrip(panels, path: str, projection: str = "xy"):
    """Side-by-side panels, one per (title, cloud, color), on a shared scale."""
    panels = list(panels)
    if not panels:
        raise ValueError("need at least one panel to plot")
    if projection not in _PROJECTION_AXES:
        raise ValueError(f"projection must be one of {sorted(_PROJECTION_AXES)}")
    axes = list(_PROJECTION_AXES[projection])
    planar = [cloud.points[:, axes] for _, cloud, _ in panels]
    lo, hi = _projection_bounds(planar)
    width, height = hi[0] - lo[0], hi[1] - lo[1]
    gap = 0.05 * width
    total_w = len(panels) * width + (len(panels) - 1) * gap
    caption = 0.08 * height
    radius = 0.006 * float(max(width, height))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {_fmt(total_w)} {_fmt(height + caption)}" '
        f'width="960" height="{_fmt(960.0 * (height + caption) / total_w)}">',
    ]
    for i, (pts, (title, _, color)) in enumerate(zip(planar, panels)):
        shift = i * (width + gap)
        lines.append(
            f'<text x="{_fmt(shift + 0.02 * width)}" y="{_fmt(0.9 * caption)}" '
            f'font-size="{_fmt(0.6 * caption)}" font-family="sans-serif">{title}</text>')
        lines.append(f'<g transform="translate(0,{_fmt(caption)})">')
        _svg_panel(lines, pts, color, lo, hi, radius, shift)
        lines.append("</g>")
    lines.append("</svg>")
    _atomic_write_text(path, "\n".join(lines) + "\n")
