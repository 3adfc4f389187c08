"""Skip-gram negative-sampling word vectors and PV-DBOW document vectors."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from .errors import TrainingError, UnknownTermError, ValidationError
from .preprocess import Corpus, Vocabulary


@dataclass(frozen=True)
class EmbedParams:
    dim: int = 100
    window: int = 5
    negative: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 5
    subsample_t: float = 1e-4
    seed: int = 42

    def __post_init__(self):
        if self.dim < 2:
            raise ValidationError("dim must be >= 2")
        if self.window < 1:
            raise ValidationError("window must be >= 1")
        if self.negative < 1:
            raise ValidationError("negative must be >= 1")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not 0 < self.initial_lr <= 1:
            raise ValidationError("initial_lr must be in (0, 1]")
        if self.min_count < 1:
            raise ValidationError("min_count must be >= 1")
        if self.subsample_t < 0:
            raise ValidationError("subsample_t must be >= 0")


@dataclass
class EmbeddingModel:
    vocab: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    params: EmbedParams
    loss_history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, term: str) -> np.ndarray:
        if term not in self.vocab:
            raise UnknownTermError(f"term {term!r} not in model vocabulary")
        return self.input_vectors[self.vocab.id(term)]


@dataclass
class DocEmbeddingModel:
    doc_ids: list
    doc_vectors: np.ndarray
    output_vectors: np.ndarray
    vocab: Vocabulary
    params: EmbedParams
    untrained: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.doc_vectors.shape[1]


# --- objective ------------------------------------------------------------

def _log_sigmoid(x):
    # stable ln(sigma(x))
    return -np.logaddexp(0.0, -x)


def sgns_pair_loss(center, context, negatives=()) -> float:
    """-ln s(c.o) - sum_n ln s(-c.n) for one (center, context) pair."""
    c = np.asarray(center, dtype=np.float64)
    o = np.asarray(context, dtype=np.float64)
    if c.shape != o.shape or c.ndim != 1:
        raise ValidationError("center and context vectors must have equal 1-d shapes")
    loss = -_log_sigmoid(c @ o)
    for n in negatives:
        n = np.asarray(n, dtype=np.float64)
        if n.shape != c.shape:
            raise ValidationError("negative vector dimension mismatch")
        loss -= _log_sigmoid(-(c @ n))
    return float(loss)


def sgns_pair_gradients(center, context, negatives=()):
    """Analytic gradients of ``sgns_pair_loss``: (d/dcenter, d/dcontext, [d/dneg])."""
    c = np.asarray(center, dtype=np.float64)
    o = np.asarray(context, dtype=np.float64)
    s = 1.0 / (1.0 + math.exp(-(c @ o)))
    g_c = (s - 1.0) * o
    g_o = (s - 1.0) * c
    g_n = []
    for n in negatives:
        n = np.asarray(n, dtype=np.float64)
        sn = 1.0 / (1.0 + math.exp(-(c @ n)))
        g_c = g_c + sn * n
        g_n.append(sn * c)
    return g_c, g_o, g_n


# --- training kernels -----------------------------------------------------------

@numba.njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _sigmoid(x):
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(-x))


@numba.njit(cache=True)
def _draw_negative(cum):
    return np.searchsorted(cum, np.random.random() * cum[-1], side="right")


@numba.njit(cache=True)
def _sgd_step(v, out, target, label, lr, grad_v):
    # one logistic update of out[target] against v; accumulates the v-gradient
    dim = v.shape[0]
    dot = 0.0
    for k in range(dim):
        dot += v[k] * out[target, k]
    g = (label - _sigmoid(dot)) * lr
    for k in range(dim):
        grad_v[k] += g * out[target, k]
    for k in range(dim):
        out[target, k] += g * v[k]


@numba.njit(cache=True)
def _sgns_epoch(flat, offsets, keep_prob, inp, out, cum, window, negative,
                lr0, lr_min, step0, total_steps):
    dim = inp.shape[1]
    grad = np.zeros(dim)
    step = step0
    n_docs = offsets.shape[0] - 1
    buf = np.empty(flat.shape[0], dtype=np.int32)
    for d in range(n_docs):
        # subsample token instances of this document
        m = 0
        for p in range(offsets[d], offsets[d + 1]):
            w = flat[p]
            if keep_prob[w] >= 1.0 or np.random.random() < keep_prob[w]:
                buf[m] = w
                m += 1
        for i in range(m):
            frac = step / total_steps
            lr = lr0 - (lr0 - lr_min) * frac
            if lr < lr_min:
                lr = lr_min
            step += 1
            center = buf[i]
            b = np.random.randint(1, window + 1)
            lo = i - b if i - b > 0 else 0
            hi = i + b + 1 if i + b + 1 < m else m
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = buf[j]
                grad[:] = 0.0
                _sgd_step(inp[center], out, ctx, 1.0, lr, grad)
                for _ in range(negative):
                    neg = _draw_negative(cum)
                    if neg == ctx:
                        continue
                    _sgd_step(inp[center], out, neg, 0.0, lr, grad)
                for k in range(dim):
                    inp[center, k] += grad[k]
        step += (offsets[d + 1] - offsets[d]) - m
    return step


@numba.njit(cache=True)
def _dbow_epoch(flat, offsets, keep_prob, docvec, out, cum, negative,
                lr0, lr_min, step0, total_steps):
    dim = docvec.shape[1]
    grad = np.zeros(dim)
    step = step0
    for d in range(offsets.shape[0] - 1):
        for p in range(offsets[d], offsets[d + 1]):
            frac = step / total_steps
            lr = lr0 - (lr0 - lr_min) * frac
            if lr < lr_min:
                lr = lr_min
            step += 1
            w = flat[p]
            if keep_prob[w] < 1.0 and np.random.random() >= keep_prob[w]:
                continue
            grad[:] = 0.0
            _sgd_step(docvec[d], out, w, 1.0, lr, grad)
            for _ in range(negative):
                neg = _draw_negative(cum)
                if neg == w:
                    continue
                _sgd_step(docvec[d], out, neg, 0.0, lr, grad)
            for k in range(dim):
                docvec[d, k] += grad[k]
    return step


# --- data preparation ---------------------------------------------------------

def _filtered(corpus: Corpus, min_count: int):
    """Drop terms below ``min_count``; returns (vocab, per-doc id arrays)."""
    keep = np.flatnonzero(corpus.vocab.counts >= min_count)
    remap = np.full(corpus.V, -1, dtype=np.int32)
    remap[keep] = np.arange(len(keep), dtype=np.int32)
    terms = [corpus.vocab.terms[i] for i in keep]
    vocab = Vocabulary(terms=terms, counts=corpus.vocab.counts[keep].copy())
    docs = []
    for ids in corpus.docs:
        mapped = remap[ids] if len(ids) else np.empty(0, dtype=np.int32)
        docs.append(mapped[mapped >= 0].astype(np.int32))
    return vocab, docs


def keep_probabilities(counts, t: float) -> np.ndarray:
    """Per-term keep probability min(1, (sqrt(f/t) + 1) * t / f)."""
    counts = np.asarray(counts, dtype=np.float64)
    if t <= 0:
        return np.ones_like(counts)
    f = counts / counts.sum()
    return np.minimum(1.0, (np.sqrt(f / t) + 1.0) * t / f)


def negative_cdf(counts, power: float = 0.75) -> np.ndarray:
    w = np.asarray(counts, dtype=np.float64) ** power
    return np.cumsum(w)


def _flatten(docs):
    lengths = np.array([len(d) for d in docs], dtype=np.int64)
    offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    flat = np.concatenate(docs).astype(np.int32) if docs else np.empty(0, np.int32)
    return flat, offsets


def _init_rows(rng, n, dim):
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(n, dim))


def train_word2vec(corpus: Corpus, p: Optional[EmbedParams] = None,
                   loss_sample: Optional[np.ndarray] = None) -> EmbeddingModel:
    """Train skip-gram vectors with negative sampling.

    Context windows never cross document boundaries. If ``loss_sample``
    (rows of center, context, negatives...) is given, the mean pair loss
    over it is recorded after every epoch in ``loss_history``.
    """
    p = p or EmbedParams()
    vocab, docs = _filtered(corpus, p.min_count)
    if len(vocab) == 0:
        raise TrainingError(f"no term reaches min_count={p.min_count}")
    rng = np.random.default_rng(p.seed)
    inp = _init_rows(rng, len(vocab), p.dim)
    out = np.zeros((len(vocab), p.dim))
    flat, offsets = _flatten(docs)
    keep = keep_probabilities(vocab.counts, p.subsample_t)
    cum = negative_cdf(vocab.counts)
    total = max(1, len(flat) * p.epochs)
    lr_min = p.initial_lr * 1e-4
    _seed(int(rng.integers(2 ** 31 - 1)))
    model = EmbeddingModel(vocab=vocab, input_vectors=inp, output_vectors=out, params=p)
    step = 0
    for _ in range(p.epochs):
        step = _sgns_epoch(flat, offsets, keep, inp, out, cum, p.window, p.negative,
                           p.initial_lr, lr_min, step, total)
        if loss_sample is not None:
            model.loss_history.append(mean_pair_loss(model, loss_sample))
    if not np.all(np.isfinite(inp)) or not np.all(np.isfinite(out)):
        raise TrainingError("embedding training diverged")
    return model


def sample_training_pairs(corpus: Corpus, p: EmbedParams, n_pairs: int = 500, seed: int = 0):
    """Fixed (center, context, neg...) id rows for monitoring the loss."""
    vocab, docs = _filtered(corpus, p.min_count)
    rng = np.random.default_rng(seed)
    cum = negative_cdf(vocab.counts)
    candidates = [d for d in docs if len(d) >= 2]
    if not candidates:
        raise TrainingError("no document has two in-vocabulary tokens")
    rows = np.empty((n_pairs, 2 + p.negative), dtype=np.int64)
    for r in range(n_pairs):
        doc = candidates[int(rng.integers(len(candidates)))]
        i = int(rng.integers(len(doc)))
        lo, hi = max(0, i - p.window), min(len(doc), i + p.window + 1)
        j = i
        while j == i:
            j = int(rng.integers(lo, hi))
        rows[r, 0], rows[r, 1] = doc[i], doc[j]
        rows[r, 2:] = np.searchsorted(cum, rng.random(p.negative) * cum[-1], side="right")
    return rows


def mean_pair_loss(model: EmbeddingModel, rows) -> float:
    inp, out = model.input_vectors, model.output_vectors
    c = inp[rows[:, 0]]
    pos = np.einsum("ij,ij->i", c, out[rows[:, 1]])
    loss = -_log_sigmoid(pos)
    for k in range(2, rows.shape[1]):
        loss -= _log_sigmoid(-np.einsum("ij,ij->i", c, out[rows[:, k]]))
    return float(loss.mean())


def train_doc2vec(corpus: Corpus, p: Optional[EmbedParams] = None) -> DocEmbeddingModel:
    """Distributed bag-of-words document vectors.

    Each document vector predicts its own tokens under the negative-sampling
    loss; word output vectors are shared across documents. Documents with
    no surviving token keep a zero vector and are listed in ``untrained``.
    """
    p = p or EmbedParams()
    if len(corpus.docs) == 0:
        raise TrainingError("cannot train document vectors on an empty corpus")
    vocab, docs = _filtered(corpus, p.min_count)
    if len(vocab) == 0:
        raise TrainingError(f"no term reaches min_count={p.min_count}")
    rng = np.random.default_rng(p.seed)
    docvec = _init_rows(rng, len(docs), p.dim)
    untrained = [corpus.doc_ids[i] for i, d in enumerate(docs) if len(d) == 0]
    for i, d in enumerate(docs):
        if len(d) == 0:
            docvec[i] = 0.0
    out = np.zeros((len(vocab), p.dim))
    flat, offsets = _flatten(docs)
    keep = keep_probabilities(vocab.counts, p.subsample_t)
    cum = negative_cdf(vocab.counts)
    total = max(1, len(flat) * p.epochs)
    _seed(int(rng.integers(2 ** 31 - 1)))
    step = 0
    for _ in range(p.epochs):
        step = _dbow_epoch(flat, offsets, keep, docvec, out, cum, p.negative,
                           p.initial_lr, p.initial_lr * 1e-4, step, total)
    if not np.all(np.isfinite(docvec)):
        raise TrainingError("document vector training diverged")
    return DocEmbeddingModel(doc_ids=list(corpus.doc_ids), doc_vectors=docvec, output_vectors=out,
                             vocab=vocab, params=p, untrained=untrained)


# --- queries ------------------------------------------------------------------

def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError("vectors must have equal dimensions")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValidationError("cosine similarity is undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def most_similar(model: EmbeddingModel, term: str, n: int = 20) -> list:
    """Top-``n`` (term, cosine) neighbours of ``term``, excluding itself."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    q = model.vocab.term_to_id.get(term)
    if q is None:
        raise UnknownTermError(f"term {term!r} not in model vocabulary")
    unit = unit_rows(model.input_vectors)
    scores = unit @ unit[q]
    terms = model.vocab.terms
    order = sorted((i for i in range(len(terms)) if i != q), key=lambda i: (-scores[i], terms[i]))
    return [(terms[i], float(scores[i])) for i in order[:n]]


# --- persistence --------------------------------------------------------------

def _write_vectors(path_stem: Path, labels, matrix, header: dict):
    with path_stem.with_suffix(".txt").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for label, row in zip(labels, matrix):
            fh.write(label + " " + " ".join(f"{v:.8g}" for v in row) + "\n")
    matrix.astype("<f4").tofile(path_stem.with_suffix(".bin"))
    path_stem.with_suffix(".labels").write_text("".join(f"{lab}\n" for lab in labels), encoding="utf-8")


def _read_vectors(path_stem: Path):
    header = json.loads(path_stem.with_suffix(".txt").open(encoding="utf-8").readline())
    labels = path_stem.with_suffix(".labels").read_text(encoding="utf-8").splitlines()
    rows = len(labels)
    matrix = np.fromfile(path_stem.with_suffix(".bin"), dtype="<f4").reshape(rows, header["dim"])
    return header, labels, matrix.astype(np.float64)


def save_word_model(model: EmbeddingModel, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"kind": "words", "dim": model.dim, "rows": len(model.vocab),
              "params": asdict(model.params)}
    _write_vectors(out / "words", model.vocab.terms, model.input_vectors, header)
    model.output_vectors.astype("<f4").tofile(out / "words_out.bin")
    np.savetxt(out / "words.counts", model.vocab.counts, fmt="%d")


def load_word_model(model_dir) -> EmbeddingModel:
    src = Path(model_dir)
    header, labels, inp = _read_vectors(src / "words")
    out = np.fromfile(src / "words_out.bin", dtype="<f4").reshape(inp.shape).astype(np.float64)
    counts = np.atleast_1d(np.loadtxt(src / "words.counts", dtype=np.int64))
    return EmbeddingModel(vocab=Vocabulary(terms=labels, counts=counts), input_vectors=inp,
                          output_vectors=out, params=EmbedParams(**header["params"]))


def save_doc_model(model: DocEmbeddingModel, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"kind": "docs", "dim": model.dim, "rows": len(model.doc_ids),
              "params": asdict(model.params), "untrained": model.untrained,
              "variant": "PV-DBOW"}
    _write_vectors(out / "docs", model.doc_ids, model.doc_vectors, header)


def load_doc_vectors(model_dir):
    header, labels, matrix = _read_vectors(Path(model_dir) / "docs")
    return labels, matrix, header
