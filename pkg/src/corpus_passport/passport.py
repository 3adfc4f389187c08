"""Full pipeline: corpus directory in, canonical JSON report out."""
from __future__ import annotations

import json
import logging
import math
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .embed import EmbedParams, most_similar, train_doc2vec, train_word2vec
from .errors import ConfigurationError, PassportError, StageError, ValidationError
from .preprocess import load_corpus
from .project import TsneParams, tsne
from .som import SomParams, default_grid_side, quantization_error, topographic_error, train_som, u_matrix
from .stats import (DEFAULT_ZIPF_MAX_RANK, cooccurrence_table, corpus_structure, ngrams,
                    term_frequency, zipf_fit)
from .topics import LdaParams, top_documents, top_words, train_lda

log = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 6

# stage_seed = master_seed + offset
SEED_OFFSETS = {
    "word2vec": 1,
    "doc2vec": 2,
    "lda": 3,
    "som_words": 4,
    "som_docs": 5,
    "tsne": 6,
}

VARIANT_CHOICES = {
    "structure": "A",
    "zipf": "A",
    "frequency": "C",
    "ngrams": "C",
    "cooccurrence": "C",
    "embeddings": "C",
    "topics": "C",
}


@dataclass(frozen=True)
class PassportConfig:
    seed: int = 42
    top_terms: int = 30
    zipf_max_rank: int = DEFAULT_ZIPF_MAX_RANK
    ngram_top: int = 30
    cooccurrence_top: int = 10
    embed: EmbedParams = field(default_factory=EmbedParams)
    lda: LdaParams = field(default_factory=LdaParams)
    top_words: int = 12
    top_docs: int = 10
    som_epochs: int = 20
    som_grid: Optional[int] = None      # side length; None -> ~5 sqrt(N) units
    som_word_limit: int = 2000
    query_terms: tuple = ()
    n_queries: int = 5
    neighbors: int = 20
    tsne: TsneParams = field(default_factory=TsneParams)

    def stage_seed(self, stage: str) -> int:
        return self.seed + SEED_OFFSETS[stage]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["query_terms"] = list(self.query_terms)
        return d


_NESTED = {"embed": EmbedParams, "lda": LdaParams, "tsne": TsneParams}


def config_from_dict(data: dict) -> PassportConfig:
    """Build a config from a (possibly partial, possibly dotted-key) mapping."""
    nested = {name: {} for name in _NESTED}
    top = {}
    known = {f.name for f in fields(PassportConfig)}
    for key, value in data.items():
        head, _, rest = key.partition(".")
        if head in _NESTED and rest:
            nested[head][rest] = value
        elif head in _NESTED and isinstance(value, dict):
            nested[head].update(value)
        elif key in known:
            top[key] = value
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    try:
        for name, cls in _NESTED.items():
            allowed = {f.name for f in fields(cls)}
            bad = set(nested[name]) - allowed
            if bad:
                raise ConfigurationError(f"unknown {name} keys: {sorted(bad)}")
            top[name] = cls(**nested[name])
        if "query_terms" in top:
            top["query_terms"] = tuple(top["query_terms"])
        return PassportConfig(**top)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def _parse_scalar(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip("'\"")


def load_config_file(path) -> dict:
    """Read a JSON object or ``key = value`` lines (``#`` comments, dotted keys)."""
    raw = Path(path).read_text(encoding="utf-8")
    if raw.lstrip().startswith("{"):
        return json.loads(raw)
    data, section = {}, ""
    for n, line in enumerate(raw.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{n}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip()
        data[f"{section}.{key}" if section else key] = _parse_scalar(value)
    return data


# --- canonical serialization ----------------------------------------------------

def canonical(obj):
    """Round floats to 6 significant digits and convert numpy scalars/arrays."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValidationError(f"non-finite value in report: {x}")
        x = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
        return 0.0 if x == 0 else x
    return obj


def dumps_canonical(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


# --- stages ---------------------------------------------------------------------

class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _grid_params(n: int, cfg: PassportConfig, seed: int) -> SomParams:
    side = cfg.som_grid or default_grid_side(n)
    return SomParams(rows=side, cols=side, epochs=cfg.som_epochs, seed=seed)


def som_summary(vectors, params: SomParams, trained_on: str) -> dict:
    grid = train_som(vectors, params, trained_on=trained_on)
    um = u_matrix(grid)
    summary = um.summary()
    summary.update({
        "rows": grid.rows,
        "cols": grid.cols,
        "n_inputs": int(len(vectors)),
        "quantization_error": quantization_error(grid, vectors),
        "topographic_error": topographic_error(grid, vectors),
        "umatrix": um.values,
    })
    return summary


def choose_queries(cfg: PassportConfig, frequency, model_vocab) -> list:
    if cfg.query_terms:
        return [t for t in cfg.query_terms if t in model_vocab]
    return [t for t in frequency.terms() if t in model_vocab][:cfg.n_queries]


def build_passport(corpus_dir, config: Optional[PassportConfig] = None) -> dict:
    """Run every stage on an ingested corpus directory and return the report dict."""
    cfg = config or PassportConfig()
    root = Path(corpus_dir)
    with _Stage("load"):
        if not root.is_dir():
            raise FileNotFoundError(f"corpus directory not found: {root}")
        corpus_a = load_corpus(root / "A")
        corpus_c = load_corpus(root / "C")
    report = {}
    with _Stage("stats"):
        lists = corpus_a.stopword_lists
        structure = corpus_structure(corpus_a, lists)
        report["structure"] = structure.to_dict()
        full_a = term_frequency(corpus_a)
        fit = zipf_fit(full_a, cfg.zipf_max_rank)
        report["zipf"] = dict(fit.to_dict(), counts=full_a.counts()[:fit.ranks_used])
        freq = term_frequency(corpus_c, cfg.top_terms)
        report["frequency"] = [{"term": t, "count": c} for t, c in freq.entries]
        for name, n in (("bigrams", 2), ("trigrams", 3)):
            table = ngrams(corpus_c, n, cfg.ngram_top)
            report[name] = [{"ngram": list(g), "count": c} for g, c in table.entries]
        cooc = cooccurrence_table(corpus_c, freq.terms(), cfg.cooccurrence_top)
        report["cooccurrence"] = {t: [{"ngram": list(g), "count": c} for g, c in rows]
                                  for t, rows in cooc.items()}
    with _Stage("embed"):
        w2v_params = replace(cfg.embed, seed=cfg.stage_seed("word2vec"))
        d2v_params = replace(cfg.embed, seed=cfg.stage_seed("doc2vec"))
        words = train_word2vec(corpus_c, w2v_params)
        docs = train_doc2vec(corpus_c, d2v_params)
    with _Stage("topics"):
        lda_params = replace(cfg.lda, seed=cfg.stage_seed("lda"), trace_every=0)
        lda = train_lda(corpus_c, lda_params)
        report["topics"] = [
            {"topic": k,
             "keywords": [{"term": t, "p": pr} for t, pr in top_words(lda, k, cfg.top_words)],
             "documents": [{"id": d, "theta": th} for d, th in top_documents(lda, k, cfg.top_docs)]}
            for k in range(lda.K)]
    with _Stage("similarity"):
        queries = choose_queries(cfg, freq, words.vocab)
        neighborhoods = {q: most_similar(words, q, cfg.neighbors) for q in queries}
        report["similarity_neighborhoods"] = {
            q: [{"term": t, "score": s} for t, s in rows] for q, rows in neighborhoods.items()}
    with _Stage("som_words"):
        order = np.argsort(-words.vocab.counts, kind="stable")[:cfg.som_word_limit]
        word_vecs = words.input_vectors[np.sort(order)]
        report["som_words"] = som_summary(
            word_vecs, _grid_params(len(word_vecs), cfg, cfg.stage_seed("som_words")), "words")
    with _Stage("som_docs"):
        untrained = set(docs.untrained)
        keep = [i for i, d in enumerate(docs.doc_ids) if d not in untrained]
        doc_vecs = docs.doc_vectors[keep]
        report["som_docs"] = som_summary(
            doc_vecs, _grid_params(len(doc_vecs), cfg, cfg.stage_seed("som_docs")), "documents")
    with _Stage("projection"):
        tsne_params = replace(cfg.tsne, seed=cfg.stage_seed("tsne"))
        projections = {}
        for q, rows in neighborhoods.items():
            labels = [q] + [t for t, _ in rows]
            if len(labels) <= max(3, tsne_params.perplexity):
                continue
            vecs = words.input_vectors[[words.vocab.id(t) for t in labels]]
            proj = tsne(vecs, labels, tsne_params)
            projections[q] = {"labels": labels, "points": proj.points, "query": q}
        report["projections"] = projections
    report["metadata"] = {
        "tool": "corpus-passport",
        "version": __version__,
        "master_seed": cfg.seed,
        "seeds": {stage: cfg.stage_seed(stage) for stage in SEED_OFFSETS},
        "config": cfg.to_dict(),
        "variants": dict(VARIANT_CHOICES),
        "stopword_hashes": lists.hashes(),
        "corpus": {
            "n_docs": len(corpus_c.docs),
            "tokens_A": corpus_a.vocab.total_tokens,
            "tokens_C": corpus_c.vocab.total_tokens,
            "vocab_A": corpus_a.V,
            "vocab_C": corpus_c.V,
        },
        "methods": {
            "doc_embedding": "PV-DBOW",
            "word_embedding": "skip-gram negative sampling",
            "topic_inference": "collapsed Gibbs sampling (final state)",
            "unique_ratio_basis": "distinct terms / tokens, variant A",
            "special_to_meaningful_basis": "special / meaningful",
            "som_docs_excludes": "documents without in-vocabulary tokens",
        },
        "embedding_vocab": len(words.vocab),
        "untrained_docs": len(docs.untrained),
        "lda_empty_docs": len(lda.empty_docs),
        "queries": queries,
    }
    out = canonical(report)
    # full-precision config so a rerun from metadata alone is exact
    out["metadata"]["config"] = json.loads(json.dumps(cfg.to_dict()))
    return out


def run_passport(corpus_dir, out_dir, config: Optional[PassportConfig] = None,
                 plots: bool = True) -> Path:
    """Write report.json (and SVG plots) atomically into ``out_dir``."""
    from .plots import render_plots

    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".passport-", dir=out.parent))
    try:
        report = build_passport(corpus_dir, config)
        (tmp / "report.json").write_text(dumps_canonical(report), encoding="utf-8")
        if plots:
            render_plots(report, tmp / "plots")
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out / "report.json"


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def report_schema() -> dict:
    from importlib import resources
    text = resources.files("corpus_passport.data").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(report: dict) -> None:
    import jsonschema
    try:
        jsonschema.validate(report, report_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"report does not match schema: {exc.message}") from exc


__all__ = [
    "PassportConfig", "build_passport", "run_passport", "config_from_dict", "load_config_file",
    "canonical", "dumps_canonical", "validate_report", "PassportError",
]
