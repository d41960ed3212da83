"""Command-line entry point.

Subcommands: ``parse``, ``infer-spec``, ``corpus build|stats``,
``index build``, ``generate``, ``evaluate`` (plus ``evaluate layers``).
Machine-readable output goes to stdout, diagnostics to stderr. Exit codes:
0 success, 1 input/parse error, 2 inference incomplete, 3 configuration or
usage error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import corpus_pipeline as cp
from . import evaluation as ev
from . import retrieval_engine as re_engine
from .dockerfile_syntax import ast_to_json, ast_to_text, build_ast, parse_dockerfile
from .errors import (
    ConfigError,
    DockerspecError,
    InferenceIncomplete,
    ParseError,
    SchemaError,
)
from .spec_inference import infer_spec
from .spec_model import (
    WordLists,
    default_word_lists,
    deserialize_spec,
    load_word_list,
    serialize_spec,
    spec_from_dict,
)

_WORD_LIST_OPTIONS = [
    click.option("--os-words", "os_words_path", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="OS word list (one word per line)."),
    click.option("--stop-words", "stop_words_path", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="Stop word list (one word per line)."),
]


def word_list_options(command):
    for option in reversed(_WORD_LIST_OPTIONS):
        command = option(command)
    return command


def _sibling(out: Path, tag: str) -> Path:
    base = out.name[:-len(".jsonl")] if out.name.endswith(".jsonl") else out.name
    return out.with_name(f"{base}.{tag}.jsonl")


def _load_lists(os_words_path: str | None, stop_words_path: str | None) -> WordLists:
    defaults = default_word_lists()
    try:
        os_words = load_word_list(os_words_path) if os_words_path else defaults.os_words
        stop_words = load_word_list(stop_words_path) if stop_words_path else defaults.stop_words
        return WordLists(os_words, stop_words)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad word lists: {exc}") from exc


def _read_spec_file(path: str):
    try:
        return deserialize_spec(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(str(exc)) from exc


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="JSON file with default option values per subcommand; flags win.")
@click.pass_context
def cli(ctx, config_path):
    """Infer Dockerfile specs, build corpora, retrieve, and evaluate."""
    if config_path:
        try:
            ctx.default_map = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad config file: {exc}") from exc


@cli.command("parse")
@click.argument("dockerfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "output_format", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
def parse_command(dockerfile, output_format):
    """Parse a Dockerfile and dump its tree."""
    doc = parse_dockerfile(Path(dockerfile).read_text(encoding="utf-8"))
    tree = build_ast(doc)
    if output_format == "json":
        click.echo(json.dumps(ast_to_json(tree), sort_keys=True))
    else:
        click.echo(ast_to_text(tree))


@cli.command("infer-spec")
@click.argument("dockerfile", type=click.Path(exists=True, dir_okay=False))
@word_list_options
def infer_spec_command(dockerfile, os_words_path, stop_words_path):
    """Infer the spec of one Dockerfile and print it as canonical JSON."""
    lists = _load_lists(os_words_path, stop_words_path)
    doc = parse_dockerfile(Path(dockerfile).read_text(encoding="utf-8"))
    spec = infer_spec(doc, lists)
    click.echo(serialize_spec(spec), nl=False)


@cli.group("corpus")
def corpus_group():
    """Corpus construction from a directory of Dockerfiles."""


@corpus_group.command("build")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--max-tokens", type=int, default=1024, show_default=True)
@click.option("--jobs", type=int, default=None,
              help="Parallel workers for ingestion (default: available cores).")
@word_list_options
def corpus_build(directory, out_path, seed, max_tokens, jobs, os_words_path, stop_words_path):
    """Filter, dedup, cluster, and split Dockerfiles into a JSONL corpus.

    Writes OUT plus sibling .train/.eval/.test and .pretrain JSONL streams.
    """
    lists = _load_lists(os_words_path, stop_words_path)
    entries, reasons = cp.ingest_directory(
        Path(directory), lists, jobs=jobs or os.cpu_count())
    result = cp.build_corpus(entries, seed=seed, max_tokens=max_tokens)
    reasons.update(result.reasons)
    if not result.finetune:
        raise ParseError("no eligible Dockerfiles")

    out = Path(out_path)
    cp.write_jsonl(out, result.finetune)
    cp.write_jsonl(_sibling(out, "pretrain"), result.pretrain)
    summary = {
        "corpus": str(out),
        "entries": len(result.finetune),
        "pretrain_entries": len(result.pretrain),
        "reasons": dict(sorted(reasons.items())),
        "seed": seed,
    }
    if result.split is not None:
        for name, part in (("train", result.split.train),
                           ("eval", result.split.evaluation),
                           ("test", result.split.test)):
            cp.write_jsonl(_sibling(out, name), part)
            summary[name] = len(part)
    else:
        click.echo("too few entries for an 80/10/10 split; corpus left unsplit",
                   err=True)
    click.echo(json.dumps(summary, sort_keys=True))


@corpus_group.command("stats")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--jobs", type=int, default=None)
@word_list_options
def corpus_stats(directory, jobs, os_words_path, stop_words_path):
    """Report how many files each filter rule accepts or rejects."""
    lists = _load_lists(os_words_path, stop_words_path)
    entries, ingest_reasons = cp.ingest_directory(
        Path(directory), lists, jobs=jobs or os.cpu_count())
    result = cp.build_corpus(entries)
    stats = {
        "files": sum(ingest_reasons.values()),
        "eligible": ingest_reasons.get("eligible", 0),
        "finetune_entries": len(result.finetune),
        "pretrain_entries": len(result.pretrain),
        "reasons": dict(sorted((ingest_reasons + result.reasons).items())),
    }
    click.echo(json.dumps(stats, sort_keys=True))


@cli.group("index")
def index_group():
    """Retrieval index management."""


@index_group.command("build")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--k1", type=float, default=re_engine.DEFAULT_K1, show_default=True)
@click.option("--b", type=float, default=re_engine.DEFAULT_B, show_default=True)
def index_build(corpus, out_path, k1, b):
    """Build a BM25 index file from a corpus JSONL."""
    records = cp.read_corpus_records(Path(corpus))
    entries = [(spec_from_dict(r["spec"]), r["dockerfile"]) for r in records]
    index = re_engine.build_index(entries, k1=k1, b=b)
    re_engine.save_index(index, Path(out_path))
    click.echo(json.dumps({"index": out_path, "documents": index.size,
                           "k1": k1, "b": b}, sort_keys=True))


@cli.command("generate")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Query spec JSON.")
@click.option("--index", "index_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Index file from `index build`.")
@click.option("-k", type=int, default=1, show_default=True)
@click.option("--method", type=click.Choice(["bm25", "tfidf"]), default="bm25",
              show_default=True)
def generate(spec_path, index_path, k, method):
    """Retrieve the best-matching Dockerfile(s) for a spec.

    Prints the top hit verbatim; with -k greater than 1, prints a JSON array
    of scored hits instead.
    """
    if k < 1:
        raise ConfigError("-k must be at least 1")
    spec = _read_spec_file(spec_path)
    index, entries = re_engine.load_index(Path(index_path))
    if method == "bm25":
        hits = re_engine.retrieve(spec, k, index)
    else:
        hits = re_engine.vector_retrieve(spec, k, entries)
    if k == 1:
        click.echo(hits[0].dockerfile_text, nl=False)
    else:
        click.echo(json.dumps(
            [{"doc_id": h.doc_id, "score": h.score, "dockerfile": h.dockerfile_text}
             for h in hits], sort_keys=True))


def _pair_directories(targets_dir: Path, outputs_dir: Path) -> list[tuple[str, str]]:
    target_files = {p.name: p for p in sorted(targets_dir.iterdir()) if p.is_file()}
    output_files = {p.name: p for p in sorted(outputs_dir.iterdir()) if p.is_file()}
    pairs = []
    for name in sorted(target_files):
        if name in output_files:
            pairs.append((target_files[name].read_text(encoding="utf-8"),
                          output_files[name].read_text(encoding="utf-8")))
        else:
            click.echo(f"no output for target {name}; skipped", err=True)
    return pairs


def _report_for_system(pairs, lists) -> tuple[dict, list[float]]:
    report = ev.evaluate_run(pairs, lists)
    payload = {
        "adherence_means": report.adherence_means,
        "distance": report.distance_summary,
        "bleu4_mean": report.bleu_mean,
        "evaluated_pairs": report.evaluated_pairs,
        "failed_pairs": report.failed_pairs,
    }
    distances = [r.distance.normalized for r in report.pair_results if r.error is None]
    return payload, distances


@cli.group("evaluate", invoke_without_command=True)
@click.option("--targets", "targets_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Directory of target Dockerfiles.")
@click.option("--outputs", "output_dirs", type=click.Path(exists=True, file_okay=False),
              multiple=True,
              help="Directory of generated Dockerfiles; repeat to compare systems.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@word_list_options
@click.pass_context
def evaluate_group(ctx, targets_dir, output_dirs, report_path,
                   os_words_path, stop_words_path):
    """Compare generated Dockerfiles against their targets.

    Targets and outputs are paired by filename. The report carries per-field
    adherence means, the normalized tree-distance distribution, mean BLEU-4,
    and, when several --outputs are given, pairwise significance tests.
    """
    if ctx.invoked_subcommand is not None:
        return
    if targets_dir is None or not output_dirs:
        raise click.UsageError("evaluate requires --targets and at least one --outputs")
    lists = _load_lists(os_words_path, stop_words_path)
    systems = {}
    distances = {}
    for output_dir in output_dirs:
        name = Path(output_dir).name
        pairs = _pair_directories(Path(targets_dir), Path(output_dir))
        if not pairs:
            raise ParseError(f"no target/output pairs found for {output_dir}")
        systems[name], distances[name] = _report_for_system(pairs, lists)
    payload = {"systems": systems}
    if len(systems) > 1:
        payload["comparisons"] = ev.compare_systems(distances)
    text = json.dumps(payload, sort_keys=True, indent=2)
    if report_path:
        Path(report_path).write_text(text + "\n", encoding="utf-8")
    click.echo(text)


def _read_manifest(path: str) -> tuple[list[str], str]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad manifest {path}: {exc}") from exc
    if isinstance(data, list):
        if not all(isinstance(d, str) for d in data):
            raise ParseError(f"manifest {path} must be a JSON list of digest strings")
        return data, ""
    if isinstance(data, dict) and isinstance(data.get("layers"), list):
        return [str(d) for d in data["layers"]], str(data.get("image_digest", ""))
    raise ParseError(f"manifest {path} must be a JSON list of digest strings")


@evaluate_group.command("layers")
@click.option("--original", "original_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--generated", "generated_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
def evaluate_layers(original_path, generated_path):
    """Compare layer-digest manifests from externally supplied builds."""
    original_layers, original_digest = _read_manifest(original_path)
    generated_layers, generated_digest = _read_manifest(generated_path)
    try:
        report = ev.layer_match(original_layers, generated_layers,
                                original_digest, generated_digest)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    click.echo(json.dumps({
        "digest_equal": report.digest_equal,
        "matching_layer_ratio": report.matching_layer_ratio,
    }, sort_keys=True))


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 130
    except click.UsageError as exc:
        exc.show()
        return 3
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ConfigError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except InferenceIncomplete as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (ParseError, SchemaError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except DockerspecError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
