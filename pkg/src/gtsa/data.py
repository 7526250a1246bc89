"""Tabular ingestion, standardization, stratified subsampling and the
high-dimension compression step applied before the geometric pipeline.

CSV dialect: comma-separated, first row header, UTF-8, '.' decimal.
Sources may be file paths or plain http(s) URLs (fetched to a temp file).
"""

from __future__ import annotations

import csv
import math
import tempfile
import urllib.request
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (InsufficientSamplesError, InvalidInputError,
                     MissingLabelsError, ParseError)
from .linalg import as_matrix


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    labels: np.ndarray | None = None
    feature_names: list[str] | None = None
    class_count: int | None = None

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (X.shape[0],):
                raise InvalidInputError(
                    f"{y.shape[0]} labels for {X.shape[0]} rows")
            c = self.class_count if self.class_count is not None else int(y.max()) + 1
            if y.size and (y.min() < 0 or y.max() >= c):
                raise InvalidInputError("labels outside [0, class_count)")
            object.__setattr__(self, "labels", y)
            object.__setattr__(self, "class_count", c)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class PreprocessConfig:
    """Pipeline order is standardize -> subsample -> pre_reduce."""

    standardize: bool = True
    pre_pca_threshold: int = 50
    pre_pca_dim: int = 50
    subsample_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.pre_pca_dim > self.pre_pca_threshold:
            raise InvalidInputError("pre_pca_dim must be <= pre_pca_threshold")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise InvalidInputError("subsample_fraction must be in (0, 1]")


def _fetch(source: str) -> Path:
    if isinstance(source, (str,)) and source.startswith(("http://", "https://")):
        fd = tempfile.NamedTemporaryFile(suffix=".csv", delete=False)
        with urllib.request.urlopen(source) as resp:
            fd.write(resp.read())
        fd.close()
        return Path(fd.name)
    return Path(source)


def load_csv(source, label_column: str | int | None = None) -> LabeledDataset:
    """Parse a header-row CSV into features plus an optional label column.

    Labels are factor-encoded 0..C-1 in first-appearance order; feature
    cells must be finite numbers. Errors name the offending row/column.
    """
    path = _fetch(source)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc}") from exc
    if not rows:
        raise ParseError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    if width == 0:
        raise ParseError(f"{source}: empty header row")

    label_idx: int | None = None
    if label_column is not None:
        if isinstance(label_column, int):
            if not 0 <= label_column < width:
                raise ParseError(f"label column index {label_column} out of range")
            label_idx = label_column
        else:
            if label_column not in header:
                raise ParseError(f"label column {label_column!r} not in header {header}")
            label_idx = header.index(label_column)

    feature_cols = [j for j in range(width) if j != label_idx]
    values = []
    raw_labels: list[str] = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"row {r}: has {len(row)} cells, expected {width}")
        feat = []
        for j in feature_cols:
            cell = row[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"row {r}, column {header[j]!r}: non-numeric cell {cell!r}")
            if not math.isfinite(v):
                raise ParseError(
                    f"row {r}, column {header[j]!r}: non-finite cell {cell!r}")
            feat.append(v)
        values.append(feat)
        if label_idx is not None:
            raw_labels.append(row[label_idx].strip())

    if not values:
        raise ParseError(f"{source}: no data rows")
    X = np.array(values, dtype=np.float64)

    labels = None
    if label_idx is not None:
        codes: dict[str, int] = {}
        enc = []
        for s in raw_labels:
            if s not in codes:
                codes[s] = len(codes)
            enc.append(codes[s])
        labels = np.array(enc, dtype=np.int64)

    names = [header[j] for j in feature_cols]
    return LabeledDataset(X, labels, names,
                          None if labels is None else int(labels.max()) + 1)


def save_csv(ds: LabeledDataset, path, label_name: str = "label") -> None:
    """Write a dataset back out in the load_csv dialect (repr floats, so
    load(save(ds)) round-trips exactly)."""
    names = ds.feature_names or [f"f{j}" for j in range(ds.dim)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if ds.labels is not None:
            w.writerow([*names, label_name])
            for row, lab in zip(ds.X, ds.labels):
                w.writerow([*(repr(float(v)) for v in row), int(lab)])
        else:
            w.writerow(names)
            for row in ds.X:
                w.writerow([repr(float(v)) for v in row])


def standardize(X) -> np.ndarray:
    """Center each column and divide by its population (ddof=0) standard
    deviation; constant columns are centered only (divisor clamped to 1)."""
    M = as_matrix(X, "X")
    if M.shape[0] < 2:
        raise InsufficientSamplesError("standardize needs at least 2 rows")
    mu = M.mean(axis=0)
    sd = M.std(axis=0)
    sd = np.where(sd <= 0.0, 1.0, sd)
    return (M - mu) / sd


def stratified_indices(labels: np.ndarray, fraction: float,
                       seed: int) -> np.ndarray:
    """Sorted row indices keeping round(fraction * n_c) members per class
    (round half up, at least one), chosen by a seeded per-class shuffle."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidInputError("fraction must be in (0, 1]")
    y = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    keep: list[int] = []
    for c in range(int(y.max()) + 1):
        members = np.flatnonzero(y == c)
        if members.size == 0:
            continue
        target = max(1, int(math.floor(fraction * members.size + 0.5)))
        picked = rng.permutation(members)[:target]
        keep.extend(int(i) for i in picked)
    keep.sort()
    return np.array(keep, dtype=np.int64)


def take_rows(ds: LabeledDataset, idx: np.ndarray) -> LabeledDataset:
    return LabeledDataset(ds.X[idx],
                          None if ds.labels is None else ds.labels[idx],
                          ds.feature_names, ds.class_count)


def stratified_subsample(ds: LabeledDataset, fraction: float,
                         seed: int) -> LabeledDataset:
    """Class-proportional subsample by seeded shuffle; output preserves
    the original relative row order."""
    if ds.labels is None:
        raise MissingLabelsError("stratified subsampling requires labels")
    if not 0.0 < fraction <= 1.0:
        raise InvalidInputError("fraction must be in (0, 1]")
    if fraction == 1.0:
        return ds
    return take_rows(ds, stratified_indices(ds.labels, fraction, seed))


def pre_reduce(ds: LabeledDataset, cfg: PreprocessConfig) -> LabeledDataset:
    """Compress with plain PCA when the ambient dimension exceeds the
    threshold; below it the dataset passes through unchanged."""
    from .baselines import pca_embed

    if ds.dim <= cfg.pre_pca_threshold:
        return ds
    p = min(cfg.pre_pca_dim, ds.n, ds.dim)
    _, emb = pca_embed(ds.X, p)
    return LabeledDataset(emb.Y, ds.labels, None, ds.class_count)


def preprocess(ds: LabeledDataset, cfg: PreprocessConfig) -> LabeledDataset:
    out = ds
    if cfg.standardize:
        out = replace(out, X=standardize(out.X))
    if cfg.subsample_fraction < 1.0:
        out = stratified_subsample(out, cfg.subsample_fraction, cfg.seed)
    return pre_reduce(out, cfg)
