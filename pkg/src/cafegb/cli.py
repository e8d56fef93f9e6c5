"""Command-line pipeline: feature selection, evaluation, and report emission.

Subcommands write deterministic artifacts into the output directory:
ranking.json, kscan.csv, metrics.csv (+ metrics_seeds.json), redundancy.csv,
stats.csv, shap_summary.csv, profile.csv, report.md, config.effective.
profile.csv holds wall-clock/RSS measurements and is the one artifact whose
values vary between runs.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (StabilityReport, StabilityRow, correlation_stats,
                       kscan, select_budget, wilcoxon_signed_rank)
from .data import (DataError, DatasetMatrix, SyntheticSpec, fit_scaler,
                   generate_synthetic, load_cache, load_csv_with_mask,
                   reimpute, save_cache, save_csv, stratified_split)
from .evaluate import run_experiment
from .gbdt import GbdtParams, train
from .profiler import profile_stage
from .ranking import CafeGbConfig, ranking_records, run
from .treeshap import shap_matrix, shap_summary

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

ENV_OUT = "CAFEGB_OUT"
ENV_WORKERS = "CAFEGB_WORKERS"

METRIC_NAMES = ("accuracy", "f1", "mcc", "roc_auc", "pr_auc")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    data: str = ""
    label_column: str = "label"
    cache: str = ""
    out: str = "out"
    workers: int = 1
    chunk_size: int = 15000
    overlap: float = 0.1
    seeds: tuple[int, ...] = (42, 52, 62, 72, 82)
    k_grid: tuple[int, ...] = (50, 100, 200, 300)
    budget: int = 100
    delta: float = 0.001
    rho_threshold: float = 0.8
    test_fraction: float = 0.2
    shap_sample: int = 1000
    shap_top: int = 20
    classifiers: tuple[str, ...] = ("gbdt", "logreg")
    gbdt_rounds: int = 100
    gbdt_max_leaves: int = 31
    gbdt_min_samples_leaf: int = 20
    gbdt_max_bins: int = 255
    normalize_chunks: bool = False

    def gbdt_params(self) -> GbdtParams:
        return GbdtParams(
            num_rounds=self.gbdt_rounds,
            max_leaves=self.gbdt_max_leaves,
            min_samples_leaf=self.gbdt_min_samples_leaf,
            max_bins=self.gbdt_max_bins,
        )

    def cafegb_config(self) -> CafeGbConfig:
        return CafeGbConfig(
            chunk_size=self.chunk_size,
            overlap=self.overlap,
            gbdt=self.gbdt_params(),
            seed=self.seeds[0],
            normalize_chunks=self.normalize_chunks,
        )


_LIST_KEYS = {"seeds": int, "k_grid": int, "classifiers": str}
_BOOL_KEYS = {"normalize_chunks"}


def _coerce(key: str, raw: str):
    default = getattr(RunConfig(), key)
    if key in _LIST_KEYS:
        items = [piece.strip() for piece in raw.split(",") if piece.strip()]
        return tuple(_LIST_KEYS[key](piece) for piece in items)
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise UsageError(f"config key '{key}' expects a boolean, got {raw!r}")
    return type(default)(raw)


def parse_config_file(path: str) -> dict:
    """Flat key = value lines; '#' starts a comment; keys match RunConfig."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown config key '{key}'")
        try:
            values[key] = _coerce(key, raw)
        except (TypeError, ValueError):
            raise UsageError(f"{path}:{lineno}: bad value for '{key}': {raw!r}") from None
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    """Precedence: defaults < config file < environment < explicit flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    if os.environ.get(ENV_OUT):
        values["out"] = os.environ[ENV_OUT]
    if os.environ.get(ENV_WORKERS):
        try:
            values["workers"] = int(os.environ[ENV_WORKERS])
        except ValueError:
            raise UsageError(f"{ENV_WORKERS} must be an integer") from None
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = tuple(flag) if isinstance(flag, list) else flag
    cfg = RunConfig(**values)
    if not cfg.seeds:
        raise UsageError("at least one seed is required")
    if cfg.workers < 1:
        raise UsageError("workers must be >= 1")
    return cfg


def write_effective_config(cfg: RunConfig) -> None:
    lines = []
    for f in sorted(fields(RunConfig), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    _outdir(cfg).joinpath("config.effective").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _outdir(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dataset_tag(cfg: RunConfig) -> str:
    return Path(cfg.data).stem if cfg.data else "dataset"


def load_dataset(cfg: RunConfig):
    """Load the CSV (or the binary cache when present); returns (ds, mask).
    The cache stores already-imputed values, so its mask is empty."""
    if not cfg.data:
        raise UsageError("--data is required (CSV with a header row)")
    if cfg.cache and Path(cfg.cache).exists():
        ds = load_cache(cfg.cache)
        return ds, np.zeros(ds.values.shape, dtype=bool)
    ds, mask = load_csv_with_mask(cfg.data, cfg.label_column)
    if cfg.cache:
        save_cache(ds, cfg.cache)
    return ds, mask


def prepare_dataset(cfg: RunConfig) -> DatasetMatrix:
    """Pipeline missing-value policy: re-impute originally missing cells with
    medians over the primary seed's training rows."""
    ds, mask = load_dataset(cfg)
    if mask.any():
        split = stratified_split(ds, cfg.test_fraction, cfg.seeds[0])
        ds = reimpute(ds, mask, split.train_indices)
    return ds


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:] if line]


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise DataError(f"missing upstream artifact {path.name}; run `cafegb {producer}` first")
    return path


def _upsert_profile(cfg: RunConfig, profiles) -> None:
    """Keep one profile row per (stage, dataset, seed); measurements vary
    between runs, so this file is exempt from byte-identity."""
    path = _outdir(cfg) / "profile.csv"
    rows: dict[tuple, list] = {}
    if path.exists():
        _, old = _read_csv(path)
        for row in old:
            rows[(row[0], row[1], row[2])] = row
    for p in profiles:
        mem = "" if p.peak_memory_mb is None else repr(p.peak_memory_mb)
        rows[(p.stage, p.dataset, str(p.seed))] = [p.stage, p.dataset, str(p.seed),
                                                   repr(p.runtime_s), mem]
    ordered = [rows[key] for key in sorted(rows)]
    _write_csv(path, ["stage", "dataset", "seed", "runtime_s", "peak_memory_mb"], ordered)


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    cfg = build_config(args)
    spec = SyntheticSpec(n=args.n, m=args.m, d_informative=args.d, seed=args.seed,
                         label_noise=args.noise, duplicate_pairs=args.duplicate_pairs)
    ds, planted = generate_synthetic(spec)
    out = _outdir(cfg)
    save_csv(ds, out / "synthetic.csv", cfg.label_column)
    out.joinpath("planted.json").write_text(
        json.dumps({"planted": sorted(planted)}) + "\n", encoding="utf-8")
    write_effective_config(cfg)
    print(f"wrote {out / 'synthetic.csv'} ({ds.rows} rows, {ds.features} features)")
    return EXIT_OK


def _selection_inputs(cfg: RunConfig):
    ds = prepare_dataset(cfg)
    split = stratified_split(ds, cfg.test_fraction, cfg.seeds[0])
    scaler = fit_scaler(ds, split.train_indices)
    std = scaler.transform(ds)
    return ds, std.take_rows(split.train_indices), std.take_rows(split.test_indices)


def cmd_select(args) -> int:
    cfg = build_config(args)
    ds, train_std, _ = _selection_inputs(cfg)
    if cfg.chunk_size > train_std.rows:
        print(f"warning: chunk_size {cfg.chunk_size} exceeds {train_std.rows} "
              "training rows; falling back to a single chunk", file=sys.stderr)
    profile, ranking = profile_stage(
        "cafegb", lambda: run(train_std, cfg.cafegb_config(), workers=cfg.workers),
        dataset=_dataset_tag(cfg), seed=cfg.seeds[0])
    out = _outdir(cfg)
    out.joinpath("ranking.json").write_text(
        json.dumps(ranking_records(ranking, ds.feature_names), indent=1) + "\n",
        encoding="utf-8")
    _upsert_profile(cfg, [profile])
    write_effective_config(cfg)
    print(f"wrote {out / 'ranking.json'} ({ds.features} features ranked)")
    return EXIT_OK


def cmd_kscan(args) -> int:
    cfg = build_config(args)
    ds = prepare_dataset(cfg)
    grid = [k for k in cfg.k_grid if k <= ds.features]
    if not grid:
        raise DataError(f"no k in k_grid fits {ds.features} features")
    profile, report = profile_stage(
        "kscan",
        lambda: kscan(ds, grid, cfg.seeds, cfg.cafegb_config(),
                      classifier=cfg.classifiers[0], test_fraction=cfg.test_fraction,
                      workers=cfg.workers),
        dataset=_dataset_tag(cfg), seed=cfg.seeds[0])
    out = _outdir(cfg)
    _write_csv(out / "kscan.csv",
               ["k", "accuracy_mean", "accuracy_std", "jaccard_stability"],
               [[row.k, row.accuracy_mean, row.accuracy_std, row.jaccard_stability]
                for row in report.rows])
    chosen = select_budget(report, cfg.delta)
    _upsert_profile(cfg, [profile])
    write_effective_config(cfg)
    print(f"wrote {out / 'kscan.csv'}; budget rule (delta={cfg.delta}) selects k={chosen}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = build_config(args)
    ds = prepare_dataset(cfg)
    if cfg.budget > ds.features:
        raise DataError(f"budget {cfg.budget} exceeds {ds.features} features")
    tag = _dataset_tag(cfg)

    def evaluate_all():
        rows = []
        for classifier in cfg.classifiers:
            for budget in (None, cfg.budget):
                rows.extend(run_experiment(ds, budget, classifier, cfg.seeds,
                                           cfg.cafegb_config(),
                                           test_fraction=cfg.test_fraction,
                                           workers=cfg.workers))
        return rows

    profile, reports = profile_stage("classification", evaluate_all,
                                     dataset=tag, seed=cfg.seeds[0])
    out = _outdir(cfg)
    seed_rows = [{
        "seed": r.seed, "classifier": r.classifier, "feature_set": r.feature_set,
        **{name: getattr(r, name) for name in METRIC_NAMES},
    } for r in reports]
    out.joinpath("metrics_seeds.json").write_text(
        json.dumps({"dataset": tag, "budget": cfg.budget, "rows": seed_rows}, indent=1) + "\n",
        encoding="utf-8")

    table = []
    for classifier in cfg.classifiers:
        for feature_set in ("baseline", f"cafegb-{cfg.budget}"):
            group = [r for r in reports
                     if r.classifier == classifier and r.feature_set == feature_set]
            row = [tag, feature_set, classifier]
            for name in METRIC_NAMES:
                vals = np.asarray([getattr(r, name) for r in group])
                row.extend([float(vals.mean()),
                            float(vals.std(ddof=1)) if vals.size > 1 else 0.0])
            table.append(row)
    header = ["dataset", "method", "classifier"]
    for name in METRIC_NAMES:
        header.extend([f"{name}_mean", f"{name}_std"])
    _write_csv(out / "metrics.csv", header, table)
    _upsert_profile(cfg, [profile])
    write_effective_config(cfg)
    print(f"wrote {out / 'metrics.csv'} ({len(reports)} seed runs)")
    return EXIT_OK


def cmd_redundancy(args) -> int:
    cfg = build_config(args)
    ds = prepare_dataset(cfg)
    ranking_path = _require(_outdir(cfg) / "ranking.json", "select")
    records = json.loads(ranking_path.read_text(encoding="utf-8"))
    name_to_idx = {name: j for j, name in enumerate(ds.feature_names)}
    try:
        order = [name_to_idx[rec["feature_name"]] for rec in records]
    except KeyError as exc:
        raise DataError(f"ranking.json names unknown feature {exc}") from None
    k = min(cfg.budget, len(order))
    report = correlation_stats(ds.values, order[:k], cfg.rho_threshold)
    out = _outdir(cfg)
    _write_csv(out / "redundancy.csv",
               ["dataset", "k", "mean_abs_rho", "max_abs_rho", "strong_pair_pct",
                "threshold", "degenerate_pairs"],
               [[_dataset_tag(cfg), report.k, report.mean_abs_rho, report.max_abs_rho,
                 report.strong_pair_pct, report.threshold, report.degenerate_pairs]])
    write_effective_config(cfg)
    print(f"wrote {out / 'redundancy.csv'}")
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = build_config(args)
    path = _require(_outdir(cfg) / "metrics_seeds.json", "evaluate")
    doc = json.loads(path.read_text(encoding="utf-8"))
    rows = doc["rows"]
    budget = doc.get("budget", cfg.budget)
    out_rows = []
    for classifier in cfg.classifiers:
        base = sorted((r for r in rows if r["classifier"] == classifier
                       and r["feature_set"] == "baseline"), key=lambda r: r["seed"])
        prop = sorted((r for r in rows if r["classifier"] == classifier
                       and r["feature_set"] == f"cafegb-{budget}"), key=lambda r: r["seed"])
        if not base or len(base) != len(prop):
            continue
        for metric in METRIC_NAMES:
            b = np.asarray([r[metric] for r in base])
            p = np.asarray([r[metric] for r in prop])
            if np.all(p - b == 0.0):
                out_rows.append([doc.get("dataset", ""), classifier, metric,
                                 "all", budget, float(b.mean()), float(p.mean()),
                                 float(p.mean()), float(p.mean()), 1.0, "degenerate"])
                continue
            res = wilcoxon_signed_rank(b, p)
            out_rows.append([doc.get("dataset", ""), classifier, metric, "all", budget,
                             float(b.mean()), float(p.mean()), res.ci_low, res.ci_high,
                             res.p_two_sided, res.method])
    if not out_rows:
        raise DataError("metrics_seeds.json holds no comparable baseline/selected runs; "
                        "run `cafegb evaluate` first")
    _write_csv(_outdir(cfg) / "stats.csv",
               ["dataset", "classifier", "metric", "baseline_k", "proposed_k",
                "mean_base", "mean_prop", "ci_low", "ci_high", "p_value", "method"],
               out_rows)
    write_effective_config(cfg)
    print(f"wrote {_outdir(cfg) / 'stats.csv'}")
    return EXIT_OK


def cmd_shap(args) -> int:
    cfg = build_config(args)
    ds, train_std, test_std = _selection_inputs(cfg)
    ranking_path = _require(_outdir(cfg) / "ranking.json", "select")
    records = json.loads(ranking_path.read_text(encoding="utf-8"))
    name_to_idx = {name: j for j, name in enumerate(ds.feature_names)}
    order = [name_to_idx[rec["feature_name"]] for rec in records]
    k = min(cfg.budget, len(order))
    selected = np.asarray(sorted(order[:k]), dtype=np.int64)

    take = min(cfg.shap_sample, test_std.rows)
    pick = np.sort(np.random.default_rng(cfg.seeds[0]).choice(test_std.rows, take, replace=False))
    explain_rows = test_std.values[np.ix_(pick, selected)]

    def explain():
        model = train(train_std.values[:, selected], train_std.labels, cfg.gbdt_params())
        summary = shap_summary(model, explain_rows, cfg.shap_top)
        matrix = shap_matrix(model, explain_rows)[0] if args.emit_matrix else None
        return summary, matrix

    profile, (summary, matrix) = profile_stage("shap", explain,
                                               dataset=_dataset_tag(cfg), seed=cfg.seeds[0])
    out = _outdir(cfg)
    _write_csv(out / "shap_summary.csv",
               ["feature", "mean_abs_shap", "frac_positive"],
               [[ds.feature_names[int(selected[j])], float(summary.mean_abs[i]),
                 float(summary.frac_positive[i])]
                for i, j in enumerate(summary.features)])
    if matrix is not None:
        _write_csv(out / "shap_values.csv",
                   [ds.feature_names[int(j)] for j in selected],
                   [[float(v) for v in row] for row in matrix])
    _upsert_profile(cfg, [profile])
    write_effective_config(cfg)
    print(f"wrote {out / 'shap_summary.csv'} (path-dependent attribution)")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = build_config(args)
    out = _outdir(cfg)
    sections = []

    def table_from_csv(name: str, title: str, producer: str):
        path = out / name
        if not path.exists():
            sections.append(f"## {title}\n\nNot computed; run `cafegb {producer}`.\n")
            return
        header, rows = _read_csv(path)
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        sections.append(f"## {title}\n\n" + "\n".join(lines) + "\n")

    ranking_path = out / "ranking.json"
    if ranking_path.exists():
        records = json.loads(ranking_path.read_text(encoding="utf-8"))
        top = records[:min(20, len(records))]
        lines = ["| rank | feature | aggregated gain |", "|---|---|---|"]
        lines += [f"| {r['rank']} | {r['feature_name']} | {r['aggregated_gain']!r} |" for r in top]
        sections.append("## Feature ranking (top 20)\n\n" + "\n".join(lines) + "\n")
    else:
        sections.append("## Feature ranking\n\nNot computed; run `cafegb select`.\n")

    table_from_csv("kscan.csv", "Feature budget scan", "kscan")
    kscan_path = out / "kscan.csv"
    if kscan_path.exists():
        header, rows = _read_csv(kscan_path)
        report = StabilityReport(rows=tuple(
            StabilityRow(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in rows))
        sections.append(f"Budget rule: accuracy within {cfg.delta} of the best, "
                        f"then maximum Jaccard stability, ties to the smaller k -> "
                        f"**k = {select_budget(report, cfg.delta)}**.\n")
    table_from_csv("metrics.csv", "Classification metrics", "evaluate")
    table_from_csv("redundancy.csv", "Redundancy analysis", "redundancy")
    table_from_csv("stats.csv", "Paired significance tests", "stats")
    table_from_csv("shap_summary.csv", "Attribution summary (top features)", "shap")
    table_from_csv("profile.csv", "Runtime and peak memory", "select/evaluate")

    footnotes = [
        "- Missing cells are imputed with per-feature training-row medians "
        "(whole-file medians at standalone load time).",
        "- Standardization uses training-row means and population (divide-by-n) "
        "standard deviations; zero-variance features keep scale 1.",
        "- Chunk windows are deterministic over a seed-shuffled row order; the run "
        "seed is the only source of cross-run variation.",
        "- Per-chunk gains are summed without normalization (normalize_chunks = "
        f"{str(cfg.normalize_chunks).lower()}); ranking ties break toward the "
        "lower feature index.",
        "- Decision threshold for accuracy/F1/MCC is 0.5.",
        "- Wilcoxon p-values are exact (sign enumeration) for <= 25 untied pairs, "
        "else a tie-corrected normal approximation; CI columns are Student-t 95% "
        "intervals of the selected-feature per-seed means.",
        "- Attribution is path-dependent (training-cover weighted) and explains "
        "the margin, not the probability.",
        "- Memory figures are peak resident-set samples (>= 10 Hz), not allocator "
        "high-water marks; profile.csv varies between runs by nature.",
    ]
    body = (f"# CAFE-GB report\n\ntoolkit version {__version__}; dataset "
            f"`{_dataset_tag(cfg)}`; seeds {', '.join(str(s) for s in cfg.seeds)}.\n\n"
            + "\n".join(sections) + "\n## Conventions\n\n" + "\n".join(footnotes) + "\n")
    out.joinpath("report.md").write_text(body, encoding="utf-8")
    write_effective_config(cfg)
    print(f"wrote {out / 'report.md'}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file; flags override it")
    sub.add_argument("--out", help=f"output directory (default: out; env {ENV_OUT})")
    sub.add_argument("--workers", type=int,
                     help=f"worker threads for chunk training; never changes outputs "
                          f"(default: 1; env {ENV_WORKERS})")


def _add_data(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", help="input CSV (header row, binary label column)")
    sub.add_argument("--label-column", dest="label_column",
                     help="label column name (default: label)")
    sub.add_argument("--cache", help="binary columnar cache path; created on first "
                                     "load and reused afterwards")


def _add_pipeline(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--chunk-size", dest="chunk_size", type=int,
                     help="rows per chunk (default: 15000)")
    sub.add_argument("--overlap", type=float,
                     help="fraction shared by consecutive chunks (default: 0.1)")
    sub.add_argument("--seeds", type=_int_list,
                     help="comma-separated run seeds (default: 42,52,62,72,82)")
    sub.add_argument("--budget", type=int,
                     help="feature budget k for selected-feature runs (default: 100)")
    sub.add_argument("--k-grid", dest="k_grid", type=_int_list,
                     help="comma-separated budgets for kscan (default: 50,100,200,300)")
    sub.add_argument("--delta", type=float,
                     help="accuracy tolerance of the budget rule (default: 0.001)")
    sub.add_argument("--rho-threshold", dest="rho_threshold", type=float,
                     help="|rho| above this counts as a strong pair (default: 0.8)")
    sub.add_argument("--test-fraction", dest="test_fraction", type=float,
                     help="held-out fraction per split (default: 0.2)")
    sub.add_argument("--classifiers", type=_str_list,
                     help="comma-separated downstream classifiers (default: gbdt,logreg)")
    sub.add_argument("--gbdt-rounds", dest="gbdt_rounds", type=int,
                     help="boosting rounds (default: 100)")
    sub.add_argument("--gbdt-max-leaves", dest="gbdt_max_leaves", type=int,
                     help="leaves per tree (default: 31)")
    sub.add_argument("--gbdt-min-samples-leaf", dest="gbdt_min_samples_leaf", type=int,
                     help="minimum rows per leaf (default: 20)")
    sub.add_argument("--gbdt-max-bins", dest="gbdt_max_bins", type=int,
                     help="histogram bins per feature (default: 255)")
    sub.add_argument("--normalize-chunks", dest="normalize_chunks", action="store_const",
                     const=True, help="L1-normalize each chunk's gains before summing "
                                      "(ablation; default: off)")


def _int_list(raw: str) -> list[int]:
    return [int(piece) for piece in raw.split(",") if piece.strip()]


def _str_list(raw: str) -> list[str]:
    return [piece.strip() for piece in raw.split(",") if piece.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cafegb",
        description="Chunk-wise aggregated gradient-boosting feature selection.")
    parser.add_argument("--version", action="version", version=f"cafegb {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    synth = subs.add_parser("synth", help="generate a planted-signal synthetic dataset")
    synth.add_argument("--n", type=int, required=True, help="rows")
    synth.add_argument("--m", type=int, required=True, help="features")
    synth.add_argument("--d", type=int, required=True, help="informative features")
    synth.add_argument("--seed", type=int, default=42, help="generator seed (default: 42)")
    synth.add_argument("--noise", type=float, default=0.0,
                       help="label flip probability (default: 0)")
    synth.add_argument("--duplicate-pairs", dest="duplicate_pairs", type=int, default=0,
                       help="exact-duplicate feature pairs to plant (default: 0)")
    _add_common(synth)
    _add_data(synth)
    synth.set_defaults(func=cmd_synth)

    for name, func, short in (
            ("select", cmd_select, "rank features via chunk-wise aggregation"),
            ("kscan", cmd_kscan, "accuracy/stability scan over feature budgets"),
            ("evaluate", cmd_evaluate, "baseline vs selected-feature classification"),
            ("redundancy", cmd_redundancy, "pairwise correlation inside the selected set"),
            ("stats", cmd_stats, "paired Wilcoxon tests on per-seed metrics"),
            ("shap", cmd_shap, "attribution summary for the selected-feature model"),
            ("report", cmd_report, "markdown digest of all artifacts")):
        sub = subs.add_parser(name, help=short)
        _add_common(sub)
        _add_data(sub)
        _add_pipeline(sub)
        if name == "shap":
            sub.add_argument("--shap-sample", dest="shap_sample", type=int,
                             help="test rows to explain (default: 1000)")
            sub.add_argument("--shap-top", dest="shap_top", type=int,
                             help="summary length (default: 20)")
            sub.add_argument("--emit-matrix", action="store_true",
                             help="also write per-row contributions to shap_values.csv")
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cafegb: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cafegb: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - single-line diagnostic contract
        print(f"cafegb: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
