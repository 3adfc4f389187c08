"""``passport`` command line.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import PassportError, StageError

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2

log = logging.getLogger("corpus_passport")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _grid(text):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like 20x20")
    return rows, cols


def _write_json(obj, path):
    from .passport import dumps_canonical
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_canonical(obj), encoding="utf-8")


# --- subcommands -----------------------------------------------------------------

def cmd_ingest(args):
    from .ingest import filter_language, load_jsonl, dump_jsonl
    from .preprocess import StopwordLists, VARIANTS, build_variant, save_corpus

    doc_set = load_jsonl(args.input)
    filtered = filter_language(doc_set, args.lang) if args.lang else doc_set
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_jsonl(filtered, out / "documents.jsonl")
    lists = StopwordLists.default()
    for variant in VARIANTS:
        save_corpus(build_variant(filtered, variant, lists), out / variant)
    summary = {
        "input": str(args.input),
        "lines_accepted": doc_set.total_count,
        "rejects": [{"line": r.line_no, "reason": r.reason} for r in doc_set.rejects],
        "language": args.lang,
        "kept_after_language_filter": filtered.total_count,
    }
    _write_json(summary, out / "ingest.json")
    print(f"ingested {filtered.total_count} documents ({len(doc_set.rejects)} rejected lines) into {out}")


def cmd_fixture(args):
    from .ingest import dump_jsonl, generate_fixture

    doc_set = generate_fixture(args.seed, args.n_docs, args.profile)
    dump_jsonl(doc_set, args.out)
    print(f"wrote {doc_set.total_count} {args.profile} documents to {args.out}")


def cmd_stats(args):
    from .preprocess import load_corpus
    from .stats import cooccurrence_table, corpus_structure, ngrams, term_frequency, zipf_fit

    root = Path(args.corpus)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    corpus = load_corpus(root / args.variant)
    corpus_a = load_corpus(root / "A")
    freq = term_frequency(corpus, args.top)
    full = term_frequency(corpus)
    fit = zipf_fit(full, args.zipf_max_rank)
    result = {
        "variant": args.variant,
        "structure": corpus_structure(corpus_a).to_dict(),
        "frequency": [{"term": t, "count": c} for t, c in freq.entries],
        "zipf": fit.to_dict(),
    }
    ngram_source = corpus if args.variant in ("B", "C") else load_corpus(root / "C")
    for name, n in (("bigrams", 2), ("trigrams", 3)):
        table = ngrams(ngram_source, n, args.top)
        result[name] = [{"ngram": list(g), "count": c} for g, c in table.entries]
    top_terms = [t for t in freq.terms() if t in ngram_source.vocab]
    result["cooccurrence"] = {
        t: [{"ngram": list(g), "count": c} for g, c in rows]
        for t, rows in cooccurrence_table(ngram_source, top_terms, args.cooc_top).items()}
    _write_json(result, args.out)
    print(f"wrote {args.out}")


def _embed_params(args):
    from .embed import EmbedParams
    return EmbedParams(dim=args.dim, window=args.window, negative=args.negative,
                       epochs=args.epochs, initial_lr=args.lr, min_count=args.min_count,
                       subsample_t=args.subsample, seed=args.seed)


def cmd_embed(args):
    from .embed import save_doc_model, save_word_model, train_doc2vec, train_word2vec
    from .preprocess import load_corpus

    corpus = load_corpus(Path(args.corpus) / args.variant)
    p = _embed_params(args)
    words = train_word2vec(corpus, p)
    save_word_model(words, args.out)
    if not args.no_docs:
        save_doc_model(train_doc2vec(corpus, p), args.out)
    print(f"trained {len(words.vocab)} word vectors (dim {p.dim}) into {args.out}")


def cmd_topics(args):
    from .preprocess import load_corpus
    from .topics import LdaParams, top_documents, top_words, train_lda

    corpus = load_corpus(Path(args.corpus) / args.variant)
    p = LdaParams(K=args.k, alpha=args.alpha, beta=args.beta, iterations=args.iters,
                  burn_in=args.burn_in, seed=args.seed, trace_every=0)
    model = train_lda(corpus, p)
    result = {
        "params": {"K": p.K, "alpha": p.alpha, "beta": p.beta, "iterations": p.iterations,
                   "burn_in": p.burn_in, "seed": p.seed, "inference": "collapsed Gibbs"},
        "empty_docs": model.empty_docs,
        "topics": [
            {"topic": k,
             "keywords": [{"term": t, "p": pr} for t, pr in top_words(model, k, args.top_words)],
             "documents": [{"id": d, "theta": th} for d, th in top_documents(model, k, args.top_docs)]}
            for k in range(model.K)],
    }
    _write_json(result, args.out)
    print(f"wrote {model.K} topics to {args.out}")


def cmd_som(args):
    from .embed import load_doc_vectors, load_word_model
    from .plots import umatrix_heatmap
    from .som import (SomParams, default_grid_side, quantization_error, save_grid,
                      topographic_error, train_som, u_matrix, write_umatrix_csv)

    if args.source == "words":
        model = load_word_model(args.model)
        order = np.argsort(-model.vocab.counts, kind="stable")
        if args.limit:
            order = order[:args.limit]
        vectors = model.input_vectors[np.sort(order)]
    else:
        _, vectors, header = load_doc_vectors(args.model)
        untrained = set(header.get("untrained", []))
        labels = Path(args.model, "docs.labels").read_text(encoding="utf-8").splitlines()
        vectors = vectors[[i for i, d in enumerate(labels) if d not in untrained]]
    rows, cols = args.grid or (default_grid_side(len(vectors)),) * 2
    p = SomParams(rows=rows, cols=cols, epochs=args.epochs, seed=args.seed)
    grid = train_som(vectors, p, trained_on="words" if args.source == "words" else "documents")
    out = Path(args.out)
    save_grid(grid, out)
    um = u_matrix(grid)
    write_umatrix_csv(um, out / "umatrix.csv")
    summary = dict(um.summary(), rows=rows, cols=cols, n_inputs=len(vectors),
                   quantization_error=quantization_error(grid, vectors),
                   topographic_error=topographic_error(grid, vectors), umatrix=um.values)
    _write_json(summary, out / "summary.json")
    from .passport import canonical
    (out / "umatrix.svg").write_text(umatrix_heatmap(canonical(summary), f"u-matrix ({args.source})"),
                                     encoding="utf-8")
    print(f"trained {rows}x{cols} map on {len(vectors)} {args.source}; QE={summary['quantization_error']:.4g}")


def cmd_project(args):
    from .embed import load_word_model, most_similar
    from .passport import canonical
    from .plots import projection_scatter
    from .project import TsneParams, tsne, write_projection_csv

    model = load_word_model(args.model)
    neighbours = most_similar(model, args.term, args.n)
    labels = [args.term] + [t for t, _ in neighbours]
    vecs = model.input_vectors[[model.vocab.id(t) for t in labels]]
    p = TsneParams(perplexity=args.perplexity, iterations=args.iters,
                   learning_rate=args.lr, seed=args.seed)
    proj = tsne(vecs, labels, p)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_projection_csv(proj, out / "projection.csv")
    section = canonical({"labels": labels, "points": proj.points, "query": args.term})
    (out / "projection.svg").write_text(projection_scatter(section, f"similarity space of '{args.term}'"),
                                        encoding="utf-8")
    print(f"projected {len(labels)} terms into {out}")


def _config_from_args(args):
    from .passport import config_from_dict, load_config_file

    data = load_config_file(args.config) if args.config else {}
    overrides = {
        "seed": args.seed, "top_terms": args.top, "som_epochs": args.som_epochs,
        "embed.dim": args.dim, "embed.epochs": args.epochs, "embed.min_count": args.min_count,
        "lda.K": args.k, "lda.iterations": args.iters,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.iters is not None and "lda.burn_in" not in data and not data.get("lda", {}).get("burn_in"):
        # keep the default 300/500 burn-in share when only the sweep count changes
        data["lda.burn_in"] = min(300, args.iters * 3 // 5)
    if args.query:
        data["query_terms"] = args.query
    return config_from_dict(data)


def cmd_passport(args):
    from .passport import run_passport

    cfg = _config_from_args(args)
    path = run_passport(args.corpus, args.out, cfg, plots=not args.no_plots)
    print(f"wrote {path}")


def cmd_plots(args):
    from .passport import load_report
    from .plots import render_plots

    paths = render_plots(load_report(args.report), args.out)
    print(f"wrote {len(paths)} plots to {args.out}")


# --- parser -----------------------------------------------------------------------

class _Help(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        text = action.help or ""
        if "%(default)" in text or action.default in (None, argparse.SUPPRESS) or action.required:
            return text
        return (text + " (default: %(default)s)").strip()


def build_parser() -> argparse.ArgumentParser:
    fmt = _Help
    parser = _Parser(prog="passport", description="Corpus passport for short social-media documents.",
                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("ingest", help="load JSONL, filter language, build variants A/B/C", formatter_class=fmt)
    p.add_argument("--input", required=True, help="JSONL file with id/text per line")
    p.add_argument("--lang", default="en", help="keep documents in this language ('' disables)")
    p.add_argument("--out", required=True, help="corpus directory to create")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fixture", help="write a synthetic JSONL corpus", formatter_class=fmt)
    p.add_argument("--profile", choices=["zipfian", "two_group", "planted_topics"], default="planted_topics")
    p.add_argument("--n-docs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("stats", help="structure, frequency, Zipf and n-gram statistics", formatter_class=fmt)
    p.add_argument("--corpus", required=True, help="corpus directory from 'ingest'")
    p.add_argument("--variant", choices=["A", "B", "C"], default="C")
    p.add_argument("--top", type=int, default=30, help="entries in frequency and n-gram tables")
    p.add_argument("--cooc-top", type=int, default=10, help="phrases per top term")
    p.add_argument("--zipf-max-rank", type=int, default=1000)
    p.add_argument("--out", default="stats.json")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("embed", help="train word and document vectors", formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    p.add_argument("--variant", choices=["A", "B", "C"], default="C")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negative", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025, help="initial learning rate")
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-4, help="subsampling threshold t (0 disables)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--no-docs", action="store_true", help="skip document vectors")
    p.add_argument("--out", default="model")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("topics", help="LDA topics by collapsed Gibbs sampling", formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    p.add_argument("--variant", choices=["A", "B", "C"], default="C")
    p.add_argument("--k", type=int, default=10, help="number of topics")
    p.add_argument("--alpha", type=float, default=None, help="document-topic prior (default 50/K)")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--burn-in", type=int, default=300)
    p.add_argument("--top-words", type=int, default=12)
    p.add_argument("--top-docs", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="topics.json")
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("som", help="self-organizing map and u-matrix", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model directory from 'embed'")
    p.add_argument("--source", choices=["words", "docs"], default="words")
    p.add_argument("--grid", type=_grid, default=None, help="ROWSxCOLS (default ~5*sqrt(N) units)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--limit", type=int, default=2000, help="most frequent words used (0 = all)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="som")
    p.set_defaults(func=cmd_som)

    p = sub.add_parser("project", help="t-SNE of a term and its nearest neighbours", formatter_class=fmt)
    p.add_argument("--model", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--n", type=int, default=20, help="neighbours to include")
    p.add_argument("--perplexity", type=float, default=5.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--lr", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="projection")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("passport", help="run the full pipeline and write report + plots", formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default="passport")
    p.add_argument("--config", help="JSON or key = value config file; flags override it")
    p.add_argument("--seed", type=int, default=None, help="master seed (config default 42)")
    p.add_argument("--top", type=int, default=None, help="frequency table size (default 30)")
    p.add_argument("--dim", type=int, default=None, help="embedding dimension (default 100)")
    p.add_argument("--epochs", type=int, default=None, help="embedding epochs (default 5)")
    p.add_argument("--min-count", type=int, default=None, help="embedding min count (default 5)")
    p.add_argument("--k", type=int, default=None, help="LDA topics (default 10)")
    p.add_argument("--iters", type=int, default=None,
                   help="Gibbs sweeps (default 500; burn-in follows at 3/5 unless configured)")
    p.add_argument("--som-epochs", type=int, default=None, help="SOM epochs (default 20)")
    p.add_argument("--query", action="append", help="similarity query term (repeatable)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_passport)

    p = sub.add_parser("plots", help="re-render SVG plots from a stored report", formatter_class=fmt)
    p.add_argument("--report", required=True)
    p.add_argument("--out", default="plots")
    p.set_defaults(func=cmd_plots)
    for sp in sub.choices.values():
        for action in sp._actions:
            # argparse skips help-less actions, so give them a default-only line
            if not action.help and action.default not in (None, argparse.SUPPRESS):
                action.help = "(default: %(default)s)"
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except StageError as exc:
        print(f"passport: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc.cause, OSError) else EXIT_VALIDATION
    except OSError as exc:
        print(f"passport: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PassportError, ValueError, KeyError, IndexError) as exc:
        print(f"passport: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
