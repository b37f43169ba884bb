"""Command line interface.

Exit codes: 0 success, 1 validation failure, 2 runtime error.
"""
import functools
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, kernels
from .dataset import load_dataset, load_visuals, write_dataset
from .embeddings import load_embeddings, save_embeddings
from .errors import (
    ConfigError, DimensionError, LeakageError, LinkError, ParseError, ValidationError,
)
from .features import FEATURE_NAMES
from .harness import (
    EvaluationReport, benchmark_scaling, make_config, run_cross_validation, score_pair,
    train_full, write_text,
)
from .neuralnet import load_model, save_model
from .synthetic import SyntheticSpec, make_corpus

VALIDATION_ERRORS = (ValidationError, LinkError, ParseError, DimensionError, ConfigError,
                     LeakageError)


def data_options(fn):
    @click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                  help="Flat key = value config file; flags override it.")
    @click.option("--embeddings", help="Word-vector text file.")
    @click.option("--topics", help="Topics TSV.")
    @click.option("--candidates", help="Candidates TSV.")
    @click.option("--visuals", help="Visual vectors file.")
    @click.option("--lenient", is_flag=True, default=None,
                  help="Do not enforce 10 terms / 20 candidates per topic.")
    @click.option("--text-dim", type=int, help="Word-vector dimension (default 300).")
    @click.option("--visual-dim", type=int, help="Visual vector dimension (default 1000).")
    @functools.wraps(fn)
    def wrapper(*args, lenient=None, **kwargs):
        kwargs["strict"] = None if lenient is None else not lenient
        return fn(*args, **kwargs)
    return wrapper


def train_options(fn):
    @click.option("--features", type=click.Choice(FEATURE_NAMES), help="Input feature set.")
    @click.option("--seed", type=int)
    @click.option("--folds", type=int)
    @click.option("--epochs", type=int)
    @click.option("--batch-size", type=int)
    @click.option("--dropout", type=float)
    @click.option("--lr", type=float)
    @click.option("--negatives", type=int, help="Negatives sampled per training topic.")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)
    return wrapper


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", count=True)
def cli(verbose):
    """Score images as labels for topics."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@data_options
def validate(config_file, **kw):
    """Check corpus and embedding files and print counts."""
    cfg = make_config(config_file, **kw)
    cfg.check_paths()
    table = load_embeddings(cfg.embeddings, cfg.text_dim)
    dataset = load_dataset(cfg.topics, cfg.candidates, cfg.visuals, strict=cfg.strict,
                           visual_dim=cfg.visual_dim)
    counts = dataset.counts()
    tokens = [t for topic in dataset.topics for t in topic.terms]
    tokens += [t for cs in dataset.candidates.values() for c in cs for t in c.caption_tokens]
    covered = sum(t in table for t in tokens)
    click.echo(f"topics\t{counts['topics']}")
    click.echo(f"candidates\t{counts['candidates']}")
    click.echo(f"images\t{counts['images']}")
    click.echo(f"embeddings\t{len(table)}")
    click.echo(f"token_coverage\t{covered / max(len(tokens), 1):.4f}")
    if tokens and covered == 0:
        raise ValidationError("no topic or caption token is covered by the embeddings")


@cli.command()
@data_options
@train_options
@click.option("--out", required=True, help="Where to write the trained model.")
def train(config_file, out, **kw):
    """Train one network on the whole corpus and save it."""
    cfg = make_config(config_file, out=out, **kw)
    model, history = train_full(cfg)
    save_model(model, out)
    click.echo(f"final training loss {history[-1]:.6f}" if history else "no epochs run")
    click.echo(f"model written to {out}")


def _emit_report(report, cfg):
    if cfg.out:
        write_text(cfg.out, report.to_json())
    if cfg.report:
        write_text(cfg.report, report.to_tsv())
    click.echo(report.to_table(), nl=False)


@cli.command()
@data_options
@train_options
@click.option("--methods", help="Comma list of dnn[:features], linear[:features], "
                                "local-ppr, global-ppr.")
@click.option("--ablations", is_flag=True, help="Evaluate all three network feature sets.")
@click.option("--out", help="Write the full report as JSON.")
@click.option("--report", help="Write the report as TSV.")
def cv(config_file, ablations, **kw):
    """Cross-validated evaluation of the network and baselines."""
    if ablations:
        from .harness import ABLATIONS
        kw["methods"] = ",".join(ABLATIONS + ("linear", "local-ppr", "global-ppr"))
    cfg = make_config(config_file, **kw)
    _emit_report(run_cross_validation(cfg), cfg)


@cli.command()
@data_options
@click.option("--method", required=True, type=click.Choice(["local-ppr", "global-ppr", "linear"]))
@click.option("--features", type=click.Choice(FEATURE_NAMES))
@click.option("--damping", type=float)
@click.option("--tol", type=float)
@click.option("--max-iters", type=int)
@click.option("--top-m", type=int, help="Keep only each node's m strongest edges.")
@click.option("--l2", type=float, help="Ridge penalty for the linear baseline.")
@click.option("--seed", type=int)
@click.option("--folds", type=int)
@click.option("--out")
@click.option("--report")
def baseline(config_file, method, **kw):
    """Cross-validated evaluation of a single baseline."""
    cfg = make_config(config_file, methods=method, **kw)
    _emit_report(run_cross_validation(cfg), cfg)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--terms", help="Comma-separated topic terms.")
@click.option("--caption", help="Image caption text.")
@click.option("--visuals", type=click.Path(exists=True), help="Visual vectors file.")
@click.option("--image-id", help="Image id to look up in --visuals.")
@click.option("--pairs", type=click.Path(exists=True),
              help="TSV of terms<TAB>image_id<TAB>caption to score in bulk.")
def score(model_path, embeddings, terms, caption, visuals, image_id, pairs):
    """Score arbitrary (topic, image) pairs with a trained model."""
    model = load_model(model_path)
    meta = model.feature_config or {}
    table = load_embeddings(embeddings, meta.get("text_dim", 300))
    uses_caption = "caption" in meta.get("name", "")
    uses_visual = "vgg" in meta.get("name", "")
    vis = load_visuals(visuals, meta.get("visual_dim", 1000)) if visuals else {}

    def visual_for(iid):
        if not uses_visual:
            return None
        if iid not in vis:
            raise ConfigError(f"model needs a visual vector; image {iid!r} not found in --visuals")
        return vis[iid]

    if pairs:
        for line in Path(pairs).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            fields = line.split("\t")
            t, iid = fields[0], fields[1]
            cap = fields[2] if len(fields) > 2 else ""
            s = score_pair(model, [w for w in t.split(",") if w], cap if uses_caption else None,
                           visual_for(iid), table)
            click.echo(f"{t}\t{iid}\t{s:.6f}")
        return
    if not terms:
        raise ConfigError("--terms or --pairs is required")
    s = score_pair(model, [w.strip() for w in terms.split(",") if w.strip()],
                   (caption or "") if uses_caption else None, visual_for(image_id), table)
    click.echo(f"{s:.6f}")


@cli.command()
@click.option("--dnn-sizes", default="1000,2000,4000,8000,16000")
@click.option("--ppr-sizes", default="250,500,1000,2000,4000")
@click.option("--trials", default=3, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--backend", type=click.Choice(["compiled", "python"]), multiple=True,
              help="Kernel backends to time (default: all available).")
@click.option("--out", help="Write timings as TSV.")
def benchmark(dnn_sizes, ppr_sizes, trials, seed, backend, out):
    """Time O(n) network scoring against O(n^2) graph re-ranking."""
    result = benchmark_scaling([int(x) for x in dnn_sizes.split(",")],
                               [int(x) for x in ppr_sizes.split(",")],
                               trials, seed, list(backend) or None)
    text = result.to_tsv()
    if out:
        write_text(out, text)
    click.echo(f"# active kernel backend: {kernels.BACKEND}")
    click.echo(text, nl=False)


@cli.command()
@click.argument("report_json", type=click.Path(exists=True))
@click.option("--tsv", is_flag=True, help="Print TSV instead of the aligned table.")
def report(report_json, tsv):
    """Render a saved cv report."""
    rep = EvaluationReport.from_json(Path(report_json).read_text(encoding="utf-8"))
    click.echo(rep.to_tsv() if tsv else rep.to_table(), nl=False)


@cli.command()
@click.option("--out", "out_dir", required=True, help="Directory for the generated files.")
@click.option("--topics", "n_topics", default=300, type=int)
@click.option("--text-dim", default=300, type=int)
@click.option("--visual-dim", default=1000, type=int)
@click.option("--seed", default=0, type=int)
def synth(out_dir, n_topics, text_dim, visual_dim, seed):
    """Write a seeded synthetic corpus and embeddings in the input formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset, table = make_corpus(SyntheticSpec(n_topics=n_topics, text_dim=text_dim,
                                               visual_dim=visual_dim), seed)
    write_dataset(dataset, out / "topics.tsv", out / "candidates.tsv", out / "visuals.txt")
    save_embeddings(table, out / "embeddings.txt")
    click.echo(f"wrote {len(dataset.topics)} topics to {out}")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="topiclabel", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 2
    except VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
