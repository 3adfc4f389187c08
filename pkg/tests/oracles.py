"""Independent measurement helpers shared by unit and acceptance tests."""
import numpy as np

from corpus_passport.embed import EmbedParams, train_word2vec, unit_rows
from corpus_passport.ingest import fixture_vocabularies, generate_fixture
from corpus_passport.preprocess import build_variant
from corpus_passport.topics import LdaParams, top_documents, top_words, train_lda

SEPARATION_PARAMS = dict(dim=50, epochs=20, min_count=2, subsample_t=1e-3)
DOC2VEC_PARAMS = dict(dim=50, epochs=20, min_count=2, subsample_t=0.0)
LDA_ALPHA = 5.0


def brute_ngrams(docs, n):
    """Sliding-window recount over token-surface lists."""
    counts = {}
    for doc in docs:
        for i in range(len(doc) - n + 1):
            key = tuple(doc[i:i + n])
            counts[key] = counts.get(key, 0) + 1
    return counts


def group_separation(seed):
    """Mean intra-group minus mean inter-group cosine on the two_group fixture."""
    corpus = build_variant(generate_fixture(seed, 200, "two_group"), "C")
    model = train_word2vec(corpus, EmbedParams(seed=seed, **SEPARATION_PARAMS))
    groups = [set(v) for v in fixture_vocabularies("two_group")]
    label = {}
    for g, words in enumerate(groups):
        for w in words:
            if w in model.vocab:
                label[model.vocab.id(w)] = g
    ids = np.array(sorted(label))
    g = np.array([label[i] for i in ids])
    unit = unit_rows(model.input_vectors[ids])
    sims = unit @ unit.T
    same = g[:, None] == g[None, :]
    off_diag = ~np.eye(len(ids), dtype=bool)
    return float(sims[same & off_diag].mean() - sims[~same].mean())


def lda_recovery(seed, n_docs=200):
    """(purity per topic, top-doc hit rate, model) for K=2 on planted_topics."""
    docs = generate_fixture(seed, n_docs, "planted_topics")
    corpus = build_variant(docs, "C")
    model = train_lda(corpus, LdaParams(K=2, alpha=LDA_ALPHA, iterations=500, seed=seed))
    vocabs = [set(v) for v in fixture_vocabularies("planted_topics")]
    weights = {d.id: d.meta["weights"] for d in docs}
    purity, hits, total = [], 0, 0
    for k in range(2):
        words = [w for w, _ in top_words(model, k, 10)]
        shares = [sum(w in v for w in words) / len(words) for v in vocabs]
        purity.append(max(shares))
        planted = int(np.argmax(shares))
        for doc_id, _ in top_documents(model, k, 10):
            total += 1
            hits += weights[doc_id][planted] >= 0.7
    return purity, hits / total, model


def median_progress(trace):
    """Median LL after burn-in (iterations 400-500) minus median over 1-100."""
    early = [ll for it, ll in trace if it <= 100]
    late = [ll for it, ll in trace if 400 <= it <= 500]
    return float(np.median(late) - np.median(early))


def blob_fixture(seed, n=50):
    rng = np.random.default_rng(seed)
    centres = rng.normal(0.0, 10.0, size=(3, 10))
    pts = np.concatenate([c + rng.normal(0.0, 1.0, size=(17, 10)) for c in centres])
    return pts[:n]


def kl_monotone_share(trace, after):
    vals = [kl for it, kl in trace if it > after]
    steps = list(zip(vals, vals[1:]))
    return sum(b <= a for a, b in steps) / len(steps)


def finite_difference(f, x, h=1e-5):
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f(x)
        x[idx] = old - h
        down = f(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def relative_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12))
