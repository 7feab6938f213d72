"""Pipeline CLI: extract -> featurize -> fit -> report, stages wired through files.

Every stage reads a declarative JSON config (flags override it), validates
its inputs up front, and writes its outputs plus a metadata sidecar into the
output directory.  Exit codes: 0 success, 1 I/O error, 2 config error,
3 provider unreachable (retryable), 4 degenerate data.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import analysis, plots
from .corpus import SentenceRecord, load_corpus
from .extraction import (
    ConstructionRecord,
    detect_constructions,
    length_filter,
    read_constructions,
    sentence_class_summary,
    usage_counts,
    write_constructions,
)
from .lm import Provider, ProviderError, train_ngram
from .predictors import (
    CorpusStats,
    FeaturizeError,
    featurize,
    FEATURE_COLUMNS,
    read_feature_csv,
    read_feature_detail_csv,
    write_feature_csv,
    write_feature_detail_csv,
)
from .regression import (
    FitError,
    ScaleError,
    accuracy,
    cross_validated_accuracy,
    fit_logistic,
    format_summary,
    standard_scale,
    summary_to_dict,
    wald_summary,
)
from .sidecar_client import SidecarClient

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_DATA = 4


class ConfigError(ValueError):
    pass


@dataclass
class ProviderConfig:
    kind: str = "ngram"
    order: int = 2
    smoothing_k: float = 0.01
    min_count: int = 2
    endpoint: Optional[str] = None

    def validate(self) -> None:
        if self.kind not in {"ngram", "external"}:
            raise ConfigError(f"provider.kind must be 'ngram' or 'external', got {self.kind!r}")
        if self.kind == "external" and not self.endpoint:
            raise ConfigError("provider.endpoint is required for the external provider")


@dataclass
class RegressionConfig:
    tolerance: float = 1e-8
    max_iter: int = 100
    ridge: float = 0.0
    cv_folds: int = 5


@dataclass
class ReportConfig:
    top_k: int = 10
    kde_grid_points: int = 256
    kde_bandwidth: Optional[float] = None
    figures: bool = True


@dataclass
class PipelineConfig:
    corpus: Optional[Path] = None
    output_dir: Path = Path("out")
    seed: int = 13
    jobs: int = 1
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    regression: RegressionConfig = field(default_factory=RegressionConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    lemma_filter: Optional[str] = None
    log_frequency: bool = False
    sample_size: int = 500

    @classmethod
    def load(
        cls,
        config_path: Optional[Path],
        *,
        output_dir: Optional[Path] = None,
        seed: Optional[int] = None,
        jobs: Optional[int] = None,
    ) -> "PipelineConfig":
        data: dict = {}
        if config_path is not None:
            try:
                with open(config_path, encoding="utf-8") as handle:
                    data = json.load(handle)
            except OSError as err:
                raise ConfigError(f"config: cannot read {config_path}: {err}") from err
            except json.JSONDecodeError as err:
                raise ConfigError(f"config: invalid JSON in {config_path}: {err}") from err
        known = {
            "corpus", "output_dir", "seed", "jobs", "provider", "regression",
            "report", "lemma_filter", "log_frequency", "sample_size",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config: unknown fields: {', '.join(unknown)}")
        cfg = cls()
        if "corpus" in data:
            cfg.corpus = Path(data["corpus"])
        if "output_dir" in data:
            cfg.output_dir = Path(data["output_dir"])
        cfg.seed = int(data.get("seed", cfg.seed))
        cfg.jobs = int(data.get("jobs", cfg.jobs))
        cfg.lemma_filter = data.get("lemma_filter")
        cfg.log_frequency = bool(data.get("log_frequency", False))
        cfg.sample_size = int(data.get("sample_size", cfg.sample_size))
        for section, target in (
            ("provider", cfg.provider),
            ("regression", cfg.regression),
            ("report", cfg.report),
        ):
            payload = data.get(section, {})
            if not isinstance(payload, dict):
                raise ConfigError(f"config: {section} must be an object")
            for key, value in payload.items():
                if not hasattr(target, key):
                    raise ConfigError(f"config: unknown field {section}.{key}")
                default = getattr(target, key)
                if value is None or default is None:
                    setattr(target, key, value)
                else:
                    setattr(target, key, type(default)(value))
        if output_dir is not None:
            cfg.output_dir = output_dir
        if seed is not None:
            cfg.seed = seed
        if jobs is not None:
            cfg.jobs = jobs
        cfg.provider.validate()
        if cfg.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return cfg

    def require_corpus(self) -> Path:
        if self.corpus is None:
            raise ConfigError("config: corpus path is missing")
        if not self.corpus.exists():
            raise ConfigError(f"config: corpus file not found: {self.corpus}")
        return self.corpus

    def canonical_hash(self) -> str:
        payload = {
            "corpus": str(self.corpus),
            "seed": self.seed,
            "provider": vars(self.provider),
            "regression": vars(self.regression),
            "report": vars(self.report),
            "lemma_filter": self.lemma_filter,
            "log_frequency": self.log_frequency,
            "sample_size": self.sample_size,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=1, sort_keys=True)
        handle.write("\n")


def _load_records(cfg: PipelineConfig) -> list[SentenceRecord]:
    result = load_corpus(cfg.require_corpus())
    for diag in result.diagnostics:
        click.echo(f"warning: skipped record: {diag}", err=True)
    return result.records


def _build_provider(cfg: PipelineConfig, records) -> Provider:
    if cfg.provider.kind == "ngram":
        return train_ngram(
            records,
            order=cfg.provider.order,
            smoothing_k=cfg.provider.smoothing_k,
            min_count=cfg.provider.min_count,
        )
    client = SidecarClient(cfg.provider.endpoint)
    client.connect()
    return client


@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="Pipeline config JSON.")
@click.option("--output-dir", type=click.Path(path_type=Path), help="Override the output directory.")
@click.option("--seed", type=int, help="Override the pipeline seed.")
@click.option("--jobs", type=int, help="Cap worker count for parallel stages.")
@click.pass_context
def main(ctx: click.Context, config_path, output_dir, seed, jobs):
    """Corpus pipeline for optional-"that" constructions."""
    ctx.ensure_object(dict)
    ctx.obj.update(config_path=config_path, output_dir=output_dir, seed=seed, jobs=jobs)


def _config_from_ctx(ctx: click.Context) -> PipelineConfig:
    opts = ctx.obj
    return PipelineConfig.load(
        opts.get("config_path"),
        output_dir=opts.get("output_dir"),
        seed=opts.get("seed"),
        jobs=opts.get("jobs"),
    )


def _run_stage(ctx: click.Context, stage) -> None:
    try:
        cfg = _config_from_ctx(ctx)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        stage(cfg)
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    except ProviderError as err:
        code = EXIT_PROVIDER if err.retryable else EXIT_DATA
        click.echo(f"provider error: {err}", err=True)
        sys.exit(code)
    except (FeaturizeError, FitError, ScaleError, ValueError) as err:
        click.echo(f"data error: {err}", err=True)
        sys.exit(EXIT_DATA)
    except OSError as err:
        click.echo(f"i/o error: {err}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(EXIT_OK)


@main.command()
@click.pass_context
def extract(ctx):
    """Detect constructions; write constructions.jsonl and count summaries."""

    def stage(cfg: PipelineConfig):
        records = _load_records(cfg)
        kept = [rec for rec in records if length_filter(rec)]
        constructions: list[ConstructionRecord] = []
        for rec in kept:
            constructions.extend(detect_constructions(rec))
        constructions.sort(key=lambda c: (c.sentence_id, c.main_verb_index))
        out = cfg.output_dir
        write_constructions(constructions, out / "constructions.jsonl")
        summary = sentence_class_summary(kept, constructions)
        with open(out / "extract_summary.csv", "w", encoding="utf-8", newline="") as handle:
            handle.write("type,sentences,mean_sentence_length\n")
            for row in summary:
                mean = "" if row.mean_sentence_length is None else repr(row.mean_sentence_length)
                handle.write(f"{row.label},{row.count},{mean}\n")
        roles = usage_counts(kept)
        with open(out / "that_roles.csv", "w", encoding="utf-8", newline="") as handle:
            handle.write("role,count\n")
            for role in sorted(roles, key=lambda r: r.value):
                handle.write(f"{role.value},{roles[role]}\n")
        if not constructions:
            click.echo("warning: no constructions detected", err=True)
        click.echo(
            f"extract: {len(records)} records in, {len(kept)} within the length filter, "
            f"{len(constructions)} constructions"
        )

    _run_stage(ctx, stage)


@main.command("featurize")
@click.option("--lemma", default=None, help="Restrict featurized rows to this main-verb lemma.")
@click.pass_context
def featurize_command(ctx, lemma):
    """Compute the predictor table from constructions.jsonl."""

    def stage(cfg: PipelineConfig):
        records = _load_records(cfg)
        corpus = {rec.id: rec for rec in records}
        constructions_path = cfg.output_dir / "constructions.jsonl"
        if not constructions_path.exists():
            raise ConfigError(f"constructions file not found: {constructions_path} (run extract)")
        constructions = read_constructions(constructions_path)
        if lemma:
            constructions = [c for c in constructions if c.main_verb_lemma == lemma]
        stats = CorpusStats.from_records(records)
        provider = _build_provider(cfg, records)
        rows = featurize(
            constructions,
            corpus,
            stats,
            provider,
            log_frequency=cfg.log_frequency,
            jobs=cfg.jobs,
        )
        write_feature_csv(rows, cfg.output_dir / "features.csv")
        write_feature_detail_csv(rows, cfg.output_dir / "features_detail.csv")
        _write_json(
            cfg.output_dir / "featurize_meta.json",
            {
                "provider": provider.describe(),
                "corpus": str(cfg.corpus),
                "config_hash": cfg.canonical_hash(),
                "n_constructions": len(constructions),
                "n_rows": len(rows),
                "imputed_sc_subject_rows": [
                    {"sentence_id": r.sentence_id, "main_verb_index": r.main_verb_index}
                    for r in rows
                    if r.sc_subject_missing
                ],
                "log_frequency": cfg.log_frequency,
                "lemma_restrict": lemma,
            },
        )
        click.echo(f"featurize: {len(rows)} rows -> {cfg.output_dir / 'features.csv'}")

    _run_stage(ctx, stage)


def _fit_group(cfg: PipelineConfig, X, y, title: str, slug: str, exclude: tuple = ()) -> str:
    if len(y) == 0:
        raise FitError("feature table is empty")
    if len(set(y.tolist())) < 2:
        raise FitError(f"{title}: labels contain a single class")
    names = tuple(n for n in FEATURE_COLUMNS if n not in exclude)
    keep = [i for i, n in enumerate(FEATURE_COLUMNS) if n not in exclude]
    X = X[:, keep]
    X_scaled, scaler = standard_scale(X, names)
    fit = fit_logistic(
        X_scaled,
        y,
        tol=cfg.regression.tolerance,
        max_iter=cfg.regression.max_iter,
        ridge=cfg.regression.ridge,
    )
    acc = accuracy(fit, X_scaled, y)
    cv = cross_validated_accuracy(
        X_scaled,
        y,
        folds=cfg.regression.cv_folds,
        seed=cfg.seed,
        tol=cfg.regression.tolerance,
        max_iter=cfg.regression.max_iter,
        ridge=cfg.regression.ridge,
    )
    summary = wald_summary(fit, names, accuracy=acc, cv_accuracy=cv)
    text = format_summary(summary, title=title)
    payload = summary_to_dict(summary)
    payload["scaler"] = {
        "names": list(scaler.names),
        "mean": [float(v) for v in scaler.mean],
        "std": [float(v) for v in scaler.std],
    }
    payload["ridge"] = cfg.regression.ridge
    payload["iterations"] = fit.iterations
    with open(cfg.output_dir / f"regression_{slug}.txt", "w", encoding="utf-8") as handle:
        handle.write(text + "\n")
    _write_json(cfg.output_dir / f"regression_{slug}.json", payload)
    return text


@main.command()
@click.pass_context
def fit(ctx):
    """Fit the omission model; writes Table-style summaries."""

    def stage(cfg: PipelineConfig):
        features_path = cfg.output_dir / "features.csv"
        if not features_path.exists():
            raise ConfigError(f"feature CSV not found: {features_path} (run featurize)")
        X, y = read_feature_csv(features_path)
        click.echo(_fit_group(cfg, X, y, "all main verb lemmas", "all"))
        if cfg.lemma_filter:
            detail = read_feature_detail_csv(cfg.output_dir / "features_detail.csv")
            mask = [row["main_verb_lemma"] == cfg.lemma_filter for row in detail]
            if len(mask) != len(y):
                raise FitError("features_detail.csv is not aligned with features.csv")
            X_sub = X[[i for i, m in enumerate(mask) if m]]
            y_sub = y[[i for i, m in enumerate(mask) if m]]
            slug = "".join(ch if ch.isalnum() else "_" for ch in cfg.lemma_filter)
            if len(y_sub) < 2 or len(set(y_sub.tolist())) < 2:
                click.echo(
                    f"warning: lemma filter {cfg.lemma_filter!r} leaves a degenerate subset "
                    f"({len(y_sub)} rows); skipping the filtered fit",
                    err=True,
                )
            else:
                try:
                    # frequency is constant within one lemma, so it drops out here
                    click.echo(
                        _fit_group(
                            cfg,
                            X_sub,
                            y_sub,
                            f"{cfg.lemma_filter!r} main verb lemma",
                            slug,
                            exclude=("mc_verb_frequency",),
                        )
                    )
                except (ScaleError, FitError) as err:
                    click.echo(
                        f"warning: filtered fit for {cfg.lemma_filter!r} skipped: {err}",
                        err=True,
                    )

    _run_stage(ctx, stage)


@main.command()
@click.pass_context
def report(ctx):
    """Analysis CSVs, annotation sample, and rendered figures."""

    def stage(cfg: PipelineConfig):
        out = cfg.output_dir
        constructions_path = out / "constructions.jsonl"
        features_path = out / "features.csv"
        for path in (constructions_path, features_path):
            if not path.exists():
                raise ConfigError(f"report input not found: {path}")
        records = _load_records(cfg)
        corpus = {rec.id: rec for rec in records}
        constructions = read_constructions(constructions_path)
        X, y = read_feature_csv(features_path)
        detail = read_feature_detail_csv(out / "features_detail.csv")

        analysis.write_summary_csv(
            analysis.dataset_summary(constructions, corpus), out / "summary.csv"
        )
        dist = analysis.lemma_distribution(constructions, cfg.report.top_k)
        analysis.write_lemmas_csv(dist, out / "lemmas.csv")

        col = {name: i for i, name in enumerate(FEATURE_COLUMNS)}
        surprisal = X[:, col["sc_onset_surprisal"]]
        pairs = []
        targets = [
            ("sc_onset_surprisal", "sc_onset_entropy", X[:, col["sc_onset_entropy"]]),
            ("sc_onset_surprisal", "mc_verb_frequency", X[:, col["mc_verb_frequency"]]),
            (
                "sc_onset_surprisal",
                "sc_onset_frequency",
                [float(row["sc_onset_frequency"]) for row in detail],
            ),
        ]
        for x_name, y_name, values in targets:
            try:
                pairs.append((x_name, y_name, analysis.pearson_r(surprisal, values)))
            except ValueError as err:
                click.echo(f"warning: correlation {x_name}~{y_name} skipped: {err}", err=True)
        analysis.write_correlations_csv(pairs, out / "correlations.csv")

        for predictor in ("sc_onset_surprisal", "sc_onset_entropy"):
            values = X[:, col[predictor]]
            per_label = {"explicit": values[y == 1], "implicit": values[y == 0]}
            usable = {k: v for k, v in per_label.items() if len(v) >= 2}
            bandwidths = {}
            for k, v in list(usable.items()):
                try:
                    bandwidths[k] = cfg.report.kde_bandwidth or analysis.scott_bandwidth(v)
                except ValueError as err:
                    click.echo(f"warning: kde {predictor}/{k} skipped: {err}", err=True)
                    del usable[k]
            if not usable:
                continue
            pad = 3 * max(bandwidths.values())
            lo = min(v.min() for v in usable.values()) - pad
            hi = max(v.max() for v in usable.values()) + pad
            grid = np.linspace(lo, hi, cfg.report.kde_grid_points)
            curves = {}
            for label, vals in usable.items():
                curve = analysis.kde(vals, grid, bandwidths[label])
                curves[label] = curve
                analysis.write_kde_csv(curve, out / f"kde_{predictor}_{label}.csv")
            if cfg.report.figures:
                plots.render_kde_figure(curves, out / f"fig_kde_{predictor}.png", predictor)
        if cfg.report.figures:
            plots.render_lemma_figure(dist, out / "fig_lemmas.png")

        sample = analysis.annotation_sample(constructions, cfg.sample_size, cfg.seed)
        analysis.write_annotation_csv(sample, corpus, out / "annotation_sample.csv")
        click.echo(f"report: wrote analysis outputs to {out}")

    _run_stage(ctx, stage)


@main.command()
@click.pass_context
def sample(ctx):
    """Export the balanced annotation sample only."""

    def stage(cfg: PipelineConfig):
        constructions_path = cfg.output_dir / "constructions.jsonl"
        if not constructions_path.exists():
            raise ConfigError(f"constructions file not found: {constructions_path}")
        records = _load_records(cfg)
        corpus = {rec.id: rec for rec in records}
        constructions = read_constructions(constructions_path)
        chosen = analysis.annotation_sample(constructions, cfg.sample_size, cfg.seed)
        analysis.write_annotation_csv(chosen, corpus, cfg.output_dir / "annotation_sample.csv")
        click.echo(f"sample: {len(chosen)} constructions -> annotation_sample.csv")

    _run_stage(ctx, stage)


if __name__ == "__main__":
    main()
