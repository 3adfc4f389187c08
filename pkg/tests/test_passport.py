import json
import re
from dataclasses import replace

import numpy as np
import pytest

from corpus_passport.embed import most_similar, train_doc2vec, train_word2vec
from corpus_passport.errors import ConfigurationError, StageError, ValidationError
from corpus_passport.passport import (
    SEED_OFFSETS, build_passport, canonical, config_from_dict, dumps_canonical, load_config_file,
    load_report, run_passport, som_summary, validate_report, _grid_params,
)
from corpus_passport.plots import frequency_chart, gray_level, render_plots, umatrix_heatmap, zipf_chart
from corpus_passport.preprocess import load_corpus
from corpus_passport.project import tsne
from corpus_passport.stats import corpus_structure, term_frequency, zipf_fit
from corpus_passport.topics import top_words, train_lda

from conftest import FAST_CONFIG


@pytest.fixture(scope="module")
def cfg():
    return config_from_dict(FAST_CONFIG)


@pytest.fixture(scope="module")
def report(corpus_dir, cfg):
    return build_passport(corpus_dir, cfg)


def test_canonical_rounding():
    assert canonical({"b": np.float64(1 / 3), "a": [np.int64(2), 1e-9, -0.0]}) == {
        "b": 0.333333, "a": [2, 1e-9, 0.0]}
    assert dumps_canonical({"b": 1, "a": 2.5}).startswith('{\n "a": 2.5')
    with pytest.raises(ValidationError):
        canonical(float("nan"))


def test_report_validates(report):
    validate_report(report)
    assert len(report["frequency"]) == 30
    assert len(report["topics"]) == 3


def test_schema_rejects_missing_section(report):
    broken = dict(report)
    del broken["zipf"]
    with pytest.raises(ValidationError):
        validate_report(broken)


def test_metadata_is_complete(report, cfg):
    meta = report["metadata"]
    assert meta["seeds"] == {k: cfg.seed + v for k, v in SEED_OFFSETS.items()}
    assert config_from_dict(meta["config"]) == cfg
    assert meta["variants"]["structure"] == "A" and meta["variants"]["topics"] == "C"


def test_report_matches_standalone_modules(report, corpus_dir, cfg):
    a, c = load_corpus(corpus_dir / "A"), load_corpus(corpus_dir / "C")
    assert report["structure"] == canonical(corpus_structure(a, a.stopword_lists).to_dict())
    assert report["frequency"] == [{"term": t, "count": n} for t, n in term_frequency(c, 30).entries]
    assert report["zipf"]["slope"] == canonical(zipf_fit(term_frequency(a)).slope)

    lda = train_lda(c, replace(cfg.lda, seed=cfg.seed + 3, trace_every=0))
    assert report["topics"][1]["keywords"] == canonical(
        [{"term": t, "p": p} for t, p in top_words(lda, 1, cfg.top_words)])

    words = train_word2vec(c, replace(cfg.embed, seed=cfg.seed + 1))
    q = report["metadata"]["queries"][0]
    expected = most_similar(words, q, cfg.neighbors)
    assert report["similarity_neighborhoods"][q] == canonical(
        [{"term": t, "score": s} for t, s in expected])

    labels = [q] + [t for t, _ in expected]
    proj = tsne(words.input_vectors[[words.vocab.id(t) for t in labels]], labels,
                replace(cfg.tsne, seed=cfg.seed + 6))
    assert report["projections"][q]["points"] == canonical(proj.points)

    docs = train_doc2vec(c, replace(cfg.embed, seed=cfg.seed + 2))
    keep = [i for i, d in enumerate(docs.doc_ids) if d not in set(docs.untrained)]
    vecs = docs.doc_vectors[keep]
    som = som_summary(vecs, _grid_params(len(vecs), cfg, cfg.seed + 5), "documents")
    assert report["som_docs"] == canonical(som)


def test_run_is_byte_identical(tmp_path, corpus_dir, cfg):
    a = run_passport(corpus_dir, tmp_path / "one", cfg)
    b = run_passport(corpus_dir, tmp_path / "two", cfg)
    assert a.read_bytes() == b.read_bytes()
    svgs = sorted(p.name for p in (tmp_path / "one" / "plots").iterdir())
    assert "frequency.svg" in svgs and any(s.startswith("tsne_") for s in svgs)
    for name in svgs:
        assert (tmp_path / "one" / "plots" / name).read_bytes() == (tmp_path / "two" / "plots" / name).read_bytes()


def test_plots_regenerate_from_stored_report(tmp_path, corpus_dir, cfg):
    path = run_passport(corpus_dir, tmp_path / "run", cfg)
    paths = render_plots(load_report(path), tmp_path / "again")
    for name, p in paths.items():
        assert p.read_bytes() == (tmp_path / "run" / "plots" / name).read_bytes()


def test_missing_corpus_leaves_no_output(tmp_path, cfg):
    with pytest.raises(StageError, match="stage 'load'"):
        run_passport(tmp_path / "missing", tmp_path / "out", cfg)
    assert list(tmp_path.iterdir()) == []


def test_stage_failure_names_stage(tmp_path, corpus_dir):
    bad = config_from_dict({**FAST_CONFIG, "embed": {"dim": 16, "epochs": 1, "min_count": 10 ** 6}})
    with pytest.raises(StageError) as err:
        run_passport(corpus_dir, tmp_path / "out", bad)
    assert err.value.stage == "embed"
    assert not (tmp_path / "out").exists()


def test_config_parsing(tmp_path):
    kv = tmp_path / "c.toml"
    kv.write_text("seed = 7\nquery_terms = [\"a\"]\n[lda]\nK = 4  # topics\n[embed]\ndim = 20\n")
    cfg = config_from_dict(load_config_file(kv))
    assert (cfg.seed, cfg.lda.K, cfg.lda.alpha, cfg.embed.dim, cfg.query_terms) == (7, 4, 12.5, 20, ("a",))
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"lda": {"K": 4}, "tsne.perplexity": 3}))
    cfg = config_from_dict(load_config_file(js))
    assert cfg.lda.K == 4 and cfg.tsne.perplexity == 3
    with pytest.raises(ConfigurationError):
        config_from_dict({"nope": 1})
    with pytest.raises(ConfigurationError):
        config_from_dict({"lda.gamma": 1})


def test_frequency_chart_binding(report):
    svg = frequency_chart(report)
    terms = re.findall(r'class="bar"[^>]*data-term="([^"]*)"', svg)
    assert terms == [e["term"] for e in report["frequency"]]
    assert len(terms) == 30


def test_zipf_chart_binding(report):
    svg = zipf_chart(report)
    slope = re.search(r'class="fit"[^>]*data-slope="([^"]*)"', svg).group(1)
    assert float(slope) == report["zipf"]["slope"]


def test_heatmap_ramp():
    svg = umatrix_heatmap({"umatrix": [[0.0, 0.0], [0.0, 0.0]]}, "flat")
    assert set(re.findall(r'class="cell"[^>]*fill="([^"]*)"', svg)) == {"rgb(128,128,128)"}
    assert gray_level(0, 0, 2) == 255 and gray_level(2, 0, 2) == 0
    levels = [gray_level(v, 0, 1) for v in np.linspace(0, 1, 11)]
    assert levels == sorted(levels, reverse=True)
