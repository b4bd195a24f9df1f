"""Single executable for the pipeline stages.

Subcommands: ``synth``, ``vocab``, ``embed``, ``project``,
``classify``, ``analyze``, and ``pipeline`` (which chains them all).
Settings may come from a ``key = value`` config file (keys mirror flag
names); explicit flags override file values.  Logs go to stderr as one
JSON object per line.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import count_cross_edges, emit_report, similarity_analysis
from .corpus import build_vocabulary, count_corpus, count_words
from .embedding import (
    build_sppmi,
    corpus_vectors,
    factorize,
    project_many,
    sample_vectors,
    split_sample,
)
from .errors import FollowsimError, FormatError
from .graph import classify_users, follow_ratios, summarize_categories
from .ingest import (
    build_manifest,
    load_corpus,
    load_degree_overrides,
    load_edges,
    load_model,
    load_vectors,
    save_manifest,
    save_model,
    write_categories,
    write_vectors,
    write_vocabulary,
)
from .synth import SynthConfig, generate

log = logging.getLogger("followsim")

DEFAULT_EMBED_SEED = 7
DEFAULT_BASELINE_SEED = 13


class _JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(record.created)),
            "level": record.levelname.lower(),
            "event": record.getMessage(),
        }
        payload.update(getattr(record, "fields", {}))
        return json.dumps(payload, sort_keys=True, default=str)


def configure_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLineFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level.upper())


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise FormatError("expected 'key = value'", path=path, line=lineno)
            key, _, value = stripped.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    converted = {}
    for action in parser._actions:
        if action.dest not in values:
            continue
        raw = values[action.dest]
        if isinstance(action, argparse._StoreTrueAction):
            converted[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            converted[action.dest] = action.type(raw)
        else:
            converted[action.dest] = raw
    parser.set_defaults(**converted)


def _thread_limit(threads: int | None):
    if threads is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        log.warning("threadpoolctl unavailable, --threads has no effect")
        return contextlib.nullcontext()
    return threadpool_limits(limits=threads)


def _log_config(command: str, args: argparse.Namespace) -> None:
    fields = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func",)
    }
    log.info("config resolved", extra={"fields": {"command": command, **fields}})


# ---------------------------------------------------------------------------
# stage helpers shared by subcommands and the pipeline


def _embed_stage(docs, *, dims, shift_k, sample_size, vocab_size, seed):
    ids = [doc.user_id for doc in docs]
    sample_ids, out_ids = split_sample(ids, sample_size, seed)
    by_id = {doc.user_id: doc for doc in docs}
    sample_counts = [count_words(by_id[uid]) for uid in sample_ids]
    vocab = build_vocabulary(sample_counts, vocab_size)
    sppmi = build_sppmi(sample_counts, vocab, shift_k)
    model = factorize(sppmi, dims, seed)
    log.info(
        "embedding model built",
        extra={
            "fields": {
                "sample_users": len(sample_ids),
                "out_of_sample_users": len(out_ids),
                "vocab_size": len(vocab),
                "dims": dims,
                "nnz": int(sppmi.matrix.nnz),
            }
        },
    )
    return model, vocab


def _analyze_stage(
    graph,
    vectors,
    *,
    baseline_pairs,
    seed,
    out_dir,
    render_figures,
    degree_overrides=None,
    config_echo=None,
):
    assignments = classify_users(graph, degree_overrides)
    counts = count_cross_edges(graph, assignments)
    similarity, histograms = similarity_analysis(
        graph, assignments, vectors, baseline_pairs=baseline_pairs, seed=seed
    )
    summary = summarize_categories(graph, assignments)
    written = emit_report(
        counts,
        similarity,
        histograms,
        summary,
        out_dir,
        config=config_echo,
        render_figures=render_figures,
    )
    log.info(
        "report written",
        extra={
            "fields": {
                "out_dir": str(out_dir),
                "files": len(written),
                "edge_mean": similarity.edge_mean,
                "nonedge_mean": similarity.nonedge_mean,
            }
        },
    )
    return written


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    config = SynthConfig(
        n_users=args.n_users,
        n_topics=args.n_topics,
        vocab_per_topic=args.vocab_per_topic,
        posts_per_user=args.posts_per_user,
        words_per_post=args.words_per_post,
        homophily=args.homophily,
        share_seeker=args.share_seeker,
        share_friend=args.share_friend,
        share_hub=args.share_hub,
        share_source=args.share_source,
        seed=args.seed,
    )
    result = generate(config, args.out_dir)
    log.info(
        "synthetic dataset written",
        extra={
            "fields": {
                "n_users": result.n_users,
                "n_edges": result.n_edges,
                "dropped_out_stubs": result.dropped_out_stubs,
                "out_dir": str(args.out_dir),
            }
        },
    )
    return 0


def cmd_vocab(args) -> int:
    docs = load_corpus(args.corpus)
    if args.sample_size is not None:
        sample_ids, _ = split_sample(
            [doc.user_id for doc in docs], args.sample_size, args.seed
        )
        keep = set(sample_ids)
        docs = [doc for doc in docs if doc.user_id in keep]
    vocab = build_vocabulary(count_corpus(docs), args.vocab_size)
    if args.out:
        write_vocabulary(vocab, args.out)
    else:
        for rank, word in enumerate(vocab.words, start=1):
            sys.stdout.write(f"{rank}\t{word}\t{vocab.counts[word]}\n")
    log.info(
        "vocabulary built",
        extra={"fields": {"words": len(vocab), "total": vocab.total}},
    )
    return 0


def cmd_embed(args) -> int:
    docs = load_corpus(args.corpus)
    model, _ = _embed_stage(
        docs,
        dims=args.dims,
        shift_k=args.shift_k,
        sample_size=args.sample_size,
        vocab_size=args.vocab_size,
        seed=args.seed,
    )
    save_model(model, args.model_out)
    if args.vectors_out:
        write_vectors(sample_vectors(model), args.vectors_out)
    log.info("model saved", extra={"fields": {"path": str(args.model_out)}})
    return 0


def cmd_project(args) -> int:
    model = load_model(args.model_in)
    docs = load_corpus(args.corpus)
    counts = count_corpus(docs)
    if args.skip_sample:
        counts = [tc for tc in counts if not model.is_sample_user(tc.user_id)]
        vectors = project_many(counts, model.vocab, model)
    else:
        vectors = corpus_vectors(model, counts)
    write_vectors(vectors, args.vectors_out)
    projected = sum(1 for v in vectors if v.origin == "projected")
    log.info(
        "vectors written",
        extra={
            "fields": {
                "path": str(args.vectors_out),
                "total": len(vectors),
                "projected": projected,
            }
        },
    )
    return 0


def _load_graph_for(args):
    extra = ()
    if getattr(args, "corpus", None):
        extra = [doc.user_id for doc in load_corpus(args.corpus)]
    graph = load_edges(args.edges, extra_nodes=extra)
    overrides = None
    if getattr(args, "degrees", None):
        overrides = load_degree_overrides(args.degrees)
    return graph, overrides


def cmd_classify(args) -> int:
    graph, overrides = _load_graph_for(args)
    ratios = follow_ratios(graph, overrides)
    assignments = classify_users(graph, overrides)
    if args.out:
        write_categories(ratios, assignments, args.out)
    else:
        for user in sorted(ratios):
            sys.stdout.write(
                f"{user}\t{format(ratios[user], '.17g')}\t{assignments[user].value}\n"
            )
    log.info("users classified", extra={"fields": {"users": len(ratios)}})
    return 0


def cmd_analyze(args) -> int:
    graph, overrides = _load_graph_for(args)
    model = load_model(args.model_in)
    if args.vectors:
        vectors = load_vectors(args.vectors)
    else:
        vectors = {v.user_id: v.values for v in sample_vectors(model)}
    config_echo = {
        "baseline_pairs": args.baseline_pairs,
        "baseline_seed": args.seed,
        "dims": model.n,
        "shift_k": model.k,
        "sample_users": len(model.user_ids),
        "vocab_size": len(model.vocab),
    }
    _analyze_stage(
        graph,
        vectors,
        baseline_pairs=args.baseline_pairs,
        seed=args.seed,
        out_dir=args.out_dir,
        render_figures=not args.no_figures,
        degree_overrides=overrides,
        config_echo=config_echo,
    )
    return 0


def cmd_pipeline(args) -> int:
    out_dir = Path(args.out_dir)
    data_dir = out_dir / "data"
    result = cmd_synth_result = generate(
        SynthConfig(
            n_users=args.n_users,
            n_topics=args.n_topics,
            vocab_per_topic=args.vocab_per_topic,
            posts_per_user=args.posts_per_user,
            words_per_post=args.words_per_post,
            homophily=args.homophily,
            share_seeker=args.share_seeker,
            share_friend=args.share_friend,
            share_hub=args.share_hub,
            share_source=args.share_source,
            seed=args.seed,
        ),
        data_dir,
    )
    log.info(
        "synth stage done",
        extra={"fields": {"n_edges": result.n_edges, "dropped": result.dropped_out_stubs}},
    )

    docs = load_corpus(result.corpus_path)
    sample_size = args.sample_size
    if sample_size is None:
        sample_size = min(10_000, max(1, len(docs) // 2))
    model, vocab = _embed_stage(
        docs,
        dims=args.dims,
        shift_k=args.shift_k,
        sample_size=sample_size,
        vocab_size=args.vocab_size,
        seed=args.embed_seed,
    )
    write_vocabulary(vocab, out_dir / "vocab.tsv")
    save_model(model, out_dir / "model.bin")

    counts = count_corpus(docs)
    vectors = corpus_vectors(model, counts)
    write_vectors(vectors, out_dir / "vectors.tsv")

    graph = load_edges(result.edges_path, extra_nodes=[d.user_id for d in docs])
    ratios = follow_ratios(graph)
    assignments = classify_users(graph)
    write_categories(ratios, assignments, out_dir / "categories.tsv")

    manifest = build_manifest(result.corpus_path, result.edges_path)
    # record dataset paths relative to the run directory so the whole
    # tree is relocatable and reruns are byte-identical
    manifest.corpus_path = str(result.corpus_path.relative_to(out_dir))
    manifest.edges_path = str(result.edges_path.relative_to(out_dir))
    save_manifest(manifest, out_dir / "manifest.json")

    config_echo = {
        "baseline_pairs": args.baseline_pairs,
        "baseline_seed": args.baseline_seed,
        "dims": args.dims,
        "shift_k": args.shift_k,
        "sample_size": sample_size,
        "vocab_size": len(vocab),
        "synth_seed": args.seed,
        "embed_seed": args.embed_seed,
        "homophily": args.homophily,
        "n_topics": args.n_topics,
        "n_users": args.n_users,
    }
    vector_map = {v.user_id: v.values for v in vectors}
    _analyze_stage(
        graph,
        vector_map,
        baseline_pairs=args.baseline_pairs,
        seed=args.baseline_seed,
        out_dir=out_dir / "report",
        render_figures=not args.no_figures,
        config_echo=config_echo,
    )
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_synth_flags(parser: argparse.ArgumentParser) -> None:
    defaults = SynthConfig()
    parser.add_argument("--n-users", type=int, default=defaults.n_users)
    parser.add_argument("--n-topics", type=int, default=defaults.n_topics)
    parser.add_argument(
        "--vocab-per-topic", type=int, default=defaults.vocab_per_topic
    )
    parser.add_argument(
        "--posts-per-user", type=int, default=defaults.posts_per_user
    )
    parser.add_argument(
        "--words-per-post", type=int, default=defaults.words_per_post
    )
    parser.add_argument(
        "--homophily", type=float, default=defaults.homophily,
        help="probability that an edge stays within the follower's topic",
    )
    parser.add_argument("--share-seeker", type=float, default=defaults.share_seeker)
    parser.add_argument("--share-friend", type=float, default=defaults.share_friend)
    parser.add_argument("--share-hub", type=float, default=defaults.share_hub)
    parser.add_argument("--share-source", type=float, default=defaults.share_source)
    parser.add_argument("--seed", type=int, default=defaults.seed)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="followsim",
        description=(
            "User embeddings from shifted positive PMI factorization, "
            "follower-followee ratio categories, and topical homophily reports."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="key = value config file", default=None)
    parser.add_argument("--log-level", default="info")
    parser.add_argument(
        "--threads", type=int, default=None,
        help="cap worker threads for numeric kernels (default: all cores)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parsers: dict[str, argparse.ArgumentParser] = {}

    p = parsers["synth"] = sub.add_parser(
        "synth", help="generate a synthetic corpus, edge set, and ground truth"
    )
    _add_synth_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = parsers["vocab"] = sub.add_parser(
        "vocab", help="build the vocabulary and emit rank/word/count TSV"
    )
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, default=10_000)
    p.add_argument(
        "--sample-size", type=int, default=None,
        help="count over a seeded sample split instead of all users",
    )
    p.add_argument("--seed", type=int, default=DEFAULT_EMBED_SEED)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_vocab)

    p = parsers["embed"] = sub.add_parser(
        "embed", help="factorize the sample users' SPPMI matrix into a model"
    )
    p.add_argument("--corpus", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--dims", type=int, default=200)
    p.add_argument("--shift-k", type=float, default=1.0)
    p.add_argument("--sample-size", type=int, default=10_000)
    p.add_argument("--vocab-size", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=DEFAULT_EMBED_SEED)
    p.add_argument("--vectors-out", default=None, help="also dump sample vectors")
    p.set_defaults(func=cmd_embed)

    p = parsers["project"] = sub.add_parser(
        "project", help="fold corpus users into a saved model's vector space"
    )
    p.add_argument("--model-in", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vectors-out", required=True)
    p.add_argument(
        "--skip-sample", action="store_true",
        help="emit only out-of-sample users",
    )
    p.set_defaults(func=cmd_project)

    p = parsers["classify"] = sub.add_parser(
        "classify", help="assign ratio categories from the follow graph"
    )
    p.add_argument("--edges", required=True)
    p.add_argument("--corpus", default=None, help="include isolated corpus users")
    p.add_argument(
        "--degrees", default=None,
        help="TSV of externally known followee/follower totals",
    )
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_classify)

    p = parsers["analyze"] = sub.add_parser(
        "analyze", help="produce the cross-category report directory"
    )
    p.add_argument("--model-in", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument(
        "--vectors", default=None,
        help="vectors TSV covering all users (default: model sample vectors)",
    )
    p.add_argument("--corpus", default=None, help="include isolated corpus users")
    p.add_argument("--degrees", default=None)
    p.add_argument("--baseline-pairs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_BASELINE_SEED)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = parsers["pipeline"] = sub.add_parser(
        "pipeline", help="synth -> vocab -> embed -> project -> classify -> analyze"
    )
    _add_synth_flags(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab-size", type=int, default=10_000)
    p.add_argument("--dims", type=int, default=200)
    p.add_argument("--shift-k", type=float, default=1.0)
    p.add_argument(
        "--sample-size", type=int, default=None,
        help="sample users for factorization (default: half the users, max 10000)",
    )
    p.add_argument("--embed-seed", type=int, default=DEFAULT_EMBED_SEED)
    p.add_argument("--baseline-pairs", type=int, default=100_000)
    p.add_argument("--baseline-seed", type=int, default=DEFAULT_BASELINE_SEED)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    return parser, parsers


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, run one subcommand, return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    pre_args, _ = pre.parse_known_args(argv)

    parser, parsers = build_parser()
    try:
        if pre_args.config:
            values = load_config_file(pre_args.config)
            for sub_parser in parsers.values():
                _apply_config(sub_parser, values)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (FollowsimError, OSError) as exc:
        sys.stderr.write(
            json.dumps(
                {"level": "error", "event": str(exc), "error_type": type(exc).__name__},
                sort_keys=True,
            )
            + "\n"
        )
        return 1

    configure_logging(args.log_level)
    _log_config(args.command, args)
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except (FollowsimError, OSError, ValueError) as exc:
        log.error(
            str(exc), extra={"fields": {"error_type": type(exc).__name__}}
        )
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
