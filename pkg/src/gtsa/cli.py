"""Command-line pipeline driver.

Subcommands:
  run <config.toml>      ingest -> preprocess -> embed -> cluster -> score,
                         writing embedding.csv / metrics.json / scatter.svg /
                         report.json into the output directory
  compare <config.toml>  several methods on one dataset, best-per-metric
                         marked, text table + comparison.json
  plot <embedding.csv>   standalone SVG scatter of a saved 2-D embedding
  score <part> <labels>  score an externally produced partition CSV

Every config key can be overridden with a --dotted.key value flag.
Exit codes: 0 ok, 1 computation error, 2 I/O or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import baselines, method
from .clustering import metrics_report, ward_cluster
from .data import LabeledDataset, PreprocessConfig, load_csv, preprocess
from .errors import GtsaError, ParseError
from .method import GtsaConfig, save_embedding_csv
from .plotting import write_scatter_svg

METHODS = ("gtsa-curvature", "gtsa-wasserstein", "pca", "kpca")


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception, exit_code: int):
        super().__init__(f"error in stage {stage!r}: {cause}")
        self.stage = stage
        self.exit_code = exit_code


def _round_floats(obj):
    """Normalize every float to 12 significant digits for stable output."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.floating):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_round_floats(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _parse_override_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(cfg: dict, pairs: list) -> dict:
    for key, raw in pairs:
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ParseError(f"override {key!r} descends into a scalar")
        node[parts[-1]] = _parse_override_value(raw)
    return cfg


def load_config(path: str, overrides: list) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise StageError("config", exc, 2)
    except tomllib.TOMLDecodeError as exc:
        raise StageError("config", ParseError(str(exc)), 2)
    try:
        return apply_overrides(cfg, overrides)
    except ParseError as exc:
        raise StageError("config", exc, 2)


def _collect_overrides(extra: list) -> list:
    pairs = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ParseError(f"unexpected argument {tok!r}")
        if i + 1 >= len(extra):
            raise ParseError(f"override flag {tok!r} is missing a value")
        pairs.append((tok[2:], extra[i + 1]))
        i += 2
    return pairs


def _gtsa_config(m: dict, mode: str, seed: int) -> GtsaConfig:
    kw = dict(
        k=int(m.get("k", 10)),
        p=int(m.get("p", 2)),
        tau=m.get("tau", "auto"),
        mode=mode,
        seed=seed,
    )
    for key in ("d_intrinsic", "labeled_fraction", "ot_backend",
                "wasserstein_weight_form", "sparsity", "dense_limit",
                "scale_by_eigenvalues", "include_self", "sinkhorn_epsilon",
                "sliced_projections"):
        if key in m:
            kw[key] = m[key]
    if "tau_candidates" in m:
        kw["tau_candidates"] = tuple(m["tau_candidates"])
    return GtsaConfig(**kw)


def run_method(ds: LabeledDataset, m: dict, seed: int):
    """Dispatch one embedding method. Returns (FitResult-like tuple):
    embedding, used row indices, extras for the report."""
    name = m.get("name")
    if name not in METHODS:
        raise ParseError(f"method name must be one of {METHODS}, got {name!r}")
    if name == "pca":
        _, emb = baselines.pca_embed(ds.X, int(m.get("p", 2)))
        return emb, np.arange(ds.n), {}
    if name == "kpca":
        gamma = m.get("gamma")
        emb = baselines.kernel_pca_rbf(ds.X, int(m.get("p", 2)),
                                       None if gamma is None else float(gamma))
        return emb, np.arange(ds.n), {}
    mode = "curvature" if name == "gtsa-curvature" else "wasserstein"
    cfg = _gtsa_config(m, mode, seed)
    res = method.fit(ds, cfg)
    extras = {
        "tau": res.tau,
        "tau_report": [dict(r) for r in res.tau_report] if res.tau_report else None,
        "bridge_count": res.bridge_count,
        "stage_seconds": dict(res.stage_seconds),
    }
    return res.embedding, res.used_indices, extras


def _require_seed(cfg: dict) -> int:
    if "seed" not in cfg:
        raise StageError("config", ParseError("config must set a seed"), 2)
    return int(cfg["seed"])


def _ingest(cfg: dict) -> LabeledDataset:
    d = cfg.get("dataset", {})
    if "source" not in d:
        raise StageError("config", ParseError("dataset.source is required"), 2)
    try:
        return load_csv(d["source"], d.get("label_column"))
    except (GtsaError, OSError) as exc:
        raise StageError("ingest", exc, 2)


def _preprocess(ds: LabeledDataset, cfg: dict, seed: int) -> LabeledDataset:
    p = cfg.get("preprocess", {})
    pc = PreprocessConfig(
        standardize=bool(p.get("standardize", True)),
        pre_pca_threshold=int(p.get("pre_pca_threshold", 50)),
        pre_pca_dim=int(p.get("pre_pca_dim", 50)),
        subsample_fraction=float(p.get("subsample_fraction", 1.0)),
        seed=seed,
    )
    try:
        return preprocess(ds, pc)
    except GtsaError as exc:
        raise StageError("preprocess", exc, 1)


def _evaluate(ds, emb, used, m: dict):
    """Ward + external indices when labels exist."""
    if ds.labels is None:
        return None, None
    labels = ds.labels[used]
    n_clusters = int(m.get("n_clusters", ds.class_count))
    part = ward_cluster(emb.Y, n_clusters)
    return part, metrics_report(part.assignments, labels)


def cmd_run(args, overrides) -> int:
    t_start = time.perf_counter()
    cfg = load_config(args.config, overrides)
    seed = _require_seed(cfg)
    m = cfg.get("method", {})
    if "name" not in m:
        raise StageError("config", ParseError("method.name is required"), 2)
    outdir = Path(cfg.get("output_dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {}

    t0 = time.perf_counter()
    ds = _ingest(cfg)
    timings["ingest"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ds = _preprocess(ds, cfg, seed)
    timings["preprocess"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        emb, used, extras = run_method(ds, m, seed)
    except ParseError:
        raise
    except GtsaError as exc:
        raise StageError("method", exc, 1)
    timings["method"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        part, metrics = _evaluate(ds, emb, used, m)
    except GtsaError as exc:
        raise StageError("clustering", exc, 1)
    timings["clustering"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        labels = None if ds.labels is None else ds.labels[used]
        save_embedding_csv(emb, outdir / "embedding.csv", used, labels)
        if metrics is not None:
            write_json(outdir / "metrics.json", metrics)
        if emb.Y.shape[1] == 2:
            colors = part.assignments if part is not None else None
            write_scatter_svg(outdir / "scatter.svg", emb.Y, colors)
    except OSError as exc:
        raise StageError("output", exc, 2)
    timings["output"] = time.perf_counter() - t0

    report = {
        "config": cfg,
        "method": m.get("name"),
        "metrics": metrics,
        "stage_ms": {k: v * 1000.0 for k, v in timings.items()},
        "total_ms": (time.perf_counter() - t_start) * 1000.0,
    }
    report.update({k: v for k, v in extras.items()})
    try:
        write_json(outdir / "report.json", report)
    except OSError as exc:
        raise StageError("output", exc, 2)
    if metrics is not None:
        print(f"{m['name']}: ari={metrics['ari']:.4f} fm={metrics['fm']:.4f} "
              f"vm={metrics['vm']:.4f}")
    print(f"artifacts written to {outdir}")
    return 0


def _read_column_csv(path) -> np.ndarray:
    """Last column of a headered CSV, factor-encoded if not integral."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header and at least one row")
    vals = [r[-1].strip() for r in rows[1:]]
    try:
        return np.array([int(v) for v in vals], dtype=np.int64)
    except ValueError:
        codes: dict = {}
        return np.array([codes.setdefault(v, len(codes)) for v in vals],
                        dtype=np.int64)


def _read_embedding_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header and at least one row")
    header = [h.strip() for h in rows[0]]
    ycols = [j for j, h in enumerate(header) if h.startswith("y")]
    has_label = "label" in header
    Y = np.array([[float(r[j]) for j in ycols] for r in rows[1:]])
    labels = None
    if has_label:
        li = header.index("label")
        labels = np.array([int(r[li]) for r in rows[1:]], dtype=np.int64)
    return Y, labels


def cmd_compare(args, overrides) -> int:
    cfg = load_config(args.config, overrides)
    seed = _require_seed(cfg)
    methods = cfg.get("methods")
    if not methods or not isinstance(methods, list):
        raise StageError("config",
                         ParseError("compare needs an array of [[methods]]"), 2)
    outdir = Path(cfg.get("output_dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)

    ds = _ingest(cfg)
    ds = _preprocess(ds, cfg, seed)
    if ds.labels is None:
        raise StageError("config",
                         ParseError("compare requires a labeled dataset"), 2)

    rows = []
    for m in methods:
        name = m.get("name", "?")
        try:
            emb, used, _ = run_method(ds, m, seed)
            _, metrics = _evaluate(ds, emb, used, m)
            rows.append({"method": name, **metrics})
        except (GtsaError, ParseError) as exc:
            rows.append({"method": name, "failed": str(exc)})
    for ext in cfg.get("externals", []):
        try:
            part = _read_column_csv(ext)
            if part.size != ds.n:
                raise ParseError(
                    f"{ext}: {part.size} assignments for {ds.n} rows")
            rows.append({"method": f"external:{Path(ext).name}",
                         **metrics_report(part, ds.labels)})
        except (GtsaError, OSError) as exc:
            rows.append({"method": f"external:{Path(ext).name}",
                         "failed": str(exc)})

    scored = [r for r in rows if "failed" not in r]
    best = {}
    for key in ("ari", "fm", "vm"):
        if scored:
            best[key] = max(r[key] for r in scored)

    print(f"{'method':<28} {'ARI':>10} {'FM':>10} {'VM':>10}")
    for r in rows:
        if "failed" in r:
            print(f"{r['method']:<28} failed: {r['failed']}")
            continue
        cells = []
        for key in ("ari", "fm", "vm"):
            mark = "*" if r[key] == best[key] else " "
            cells.append(f"{r[key]:>9.4f}{mark}")
        print(f"{r['method']:<28} {cells[0]} {cells[1]} {cells[2]}")

    write_json(outdir / "comparison.json",
               {"rows": rows, "best": best, "config": cfg})
    print(f"comparison written to {outdir / 'comparison.json'}")
    return 0


def cmd_plot(args) -> int:
    Y, file_labels = _read_embedding_csv(args.embedding)
    labels = file_labels
    if args.labels:
        labels = _read_column_csv(args.labels)
    write_scatter_svg(args.output, Y, labels)
    print(f"wrote {args.output}")
    return 0


def cmd_score(args) -> int:
    part = _read_column_csv(args.partition)
    truth = _read_column_csv(args.labels)
    if part.size != truth.size:
        raise StageError("score",
                         ParseError(f"{part.size} assignments for "
                                    f"{truth.size} labels"), 2)
    payload = metrics_report(part, truth)
    print(json.dumps(_round_floats(payload), sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gtsa",
        description="geodesic tangent-space aggregation embeddings and "
                    "their evaluation harness")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one method end to end")
    r.add_argument("config")
    c = sub.add_parser("compare", help="compare methods on one dataset")
    c.add_argument("config")
    p = sub.add_parser("plot", help="scatter-plot a saved 2-D embedding")
    p.add_argument("embedding")
    p.add_argument("--labels", default=None)
    p.add_argument("-o", "--output", required=True)
    s = sub.add_parser("score", help="score an imported partition CSV")
    s.add_argument("partition")
    s.add_argument("labels")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        overrides = _collect_overrides(extra)
        if args.command == "run":
            return cmd_run(args, overrides)
        if args.command == "compare":
            return cmd_compare(args, overrides)
        if extra:
            raise ParseError(f"unexpected arguments: {extra}")
        if args.command == "plot":
            return cmd_plot(args)
        return cmd_score(args)
    except StageError as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code
    except ParseError as exc:
        print(f"error in stage 'config': {exc}", file=sys.stderr)
        return 2
    except (GtsaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
