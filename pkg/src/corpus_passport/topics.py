"""LDA topic model fitted by collapsed Gibbs sampling."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numba
import numpy as np

from .errors import TrainingError, ValidationError
from .preprocess import Corpus


@dataclass(frozen=True)
class LdaParams:
    K: int = 10
    alpha: Optional[float] = None  # None -> 50 / K
    beta: float = 0.01
    iterations: int = 500
    burn_in: int = 300
    seed: int = 42
    # record the log-likelihood every n sweeps (0 disables the trace)
    trace_every: int = 10

    def __post_init__(self):
        if self.K < 2:
            raise ValidationError("K must be >= 2")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.K)
        if self.alpha <= 0 or self.beta <= 0:
            raise ValidationError("alpha and beta must be > 0")
        if not self.iterations > self.burn_in >= 0:
            raise ValidationError("need iterations > burn_in >= 0")
        if self.trace_every < 0:
            raise ValidationError("trace_every must be >= 0")


@dataclass
class TopicModel:
    terms: list
    doc_ids: list
    phi: np.ndarray          # K x V
    theta: np.ndarray        # D x K
    n_kw: np.ndarray
    n_dk: np.ndarray
    assignments: list        # per-document arrays of topic labels
    params: LdaParams
    empty_docs: list = field(default_factory=list)
    trace: list = field(default_factory=list)   # (iteration, log-likelihood)

    @property
    def K(self) -> int:
        return self.phi.shape[0]


@numba.njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _init_counts(flat, doc_of, z, n_kw, n_dk, n_k):
    for i in range(flat.shape[0]):
        k = np.random.randint(0, n_k.shape[0])
        z[i] = k
        n_kw[k, flat[i]] += 1
        n_dk[doc_of[i], k] += 1
        n_k[k] += 1


@numba.njit(cache=True)
def _sweep(flat, doc_of, z, n_kw, n_dk, n_k, alpha, beta, vbeta):
    K = n_k.shape[0]
    prob = np.empty(K)
    for i in range(flat.shape[0]):
        w = flat[i]
        d = doc_of[i]
        k = z[i]
        n_kw[k, w] -= 1
        n_dk[d, k] -= 1
        n_k[k] -= 1
        total = 0.0
        for t in range(K):
            total += (n_dk[d, t] + alpha) * (n_kw[t, w] + beta) / (n_k[t] + vbeta)
            prob[t] = total
        u = np.random.random() * total
        k = 0
        while k < K - 1 and prob[k] <= u:
            k += 1
        z[i] = k
        n_kw[k, w] += 1
        n_dk[d, k] += 1
        n_k[k] += 1


@numba.njit(cache=True)
def _loglik(flat, doc_of, n_kw, n_dk, n_k, alpha, beta):
    K, V = n_kw.shape
    n_d = n_dk.sum(axis=1)
    ll = 0.0
    for i in range(flat.shape[0]):
        w = flat[i]
        d = doc_of[i]
        s = 0.0
        for k in range(K):
            theta = (n_dk[d, k] + alpha) / (n_d[d] + K * alpha)
            phi = (n_kw[k, w] + beta) / (n_k[k] + V * beta)
            s += theta * phi
        ll += np.log(s)
    return ll


def _estimates(n_kw, n_dk, alpha, beta):
    K, V = n_kw.shape
    phi = (n_kw + beta) / (n_kw.sum(axis=1, keepdims=True) + V * beta)
    theta = (n_dk + alpha) / (n_dk.sum(axis=1, keepdims=True) + K * alpha)
    return phi, theta


def train_lda(corpus: Corpus, p: Optional[LdaParams] = None) -> TopicModel:
    """Collapsed Gibbs sampling over every token of ``corpus``.

    phi and theta come from the final sampler state. Documents with no
    tokens are left out of sampling, get a uniform theta row and are
    listed in ``empty_docs``.
    """
    p = p or LdaParams()
    V, D = corpus.V, len(corpus.docs)
    lengths = np.array([len(d) for d in corpus.docs], dtype=np.int64)
    n_tokens = int(lengths.sum())
    if n_tokens < p.K:
        raise TrainingError(f"corpus has {n_tokens} tokens, fewer than K={p.K}")
    flat = np.concatenate([d for d in corpus.docs if len(d)]).astype(np.int32)
    doc_of = np.repeat(np.arange(D, dtype=np.int32), lengths)
    z = np.empty(n_tokens, dtype=np.int32)
    n_kw = np.zeros((p.K, V), dtype=np.int64)
    n_dk = np.zeros((D, p.K), dtype=np.int64)
    n_k = np.zeros(p.K, dtype=np.int64)
    _seed(int(np.random.default_rng(p.seed).integers(2 ** 31 - 1)))
    _init_counts(flat, doc_of, z, n_kw, n_dk, n_k)
    trace = []
    for it in range(1, p.iterations + 1):
        _sweep(flat, doc_of, z, n_kw, n_dk, n_k, p.alpha, p.beta, V * p.beta)
        if p.trace_every and (it % p.trace_every == 0 or it == 1):
            trace.append((it, float(_loglik(flat, doc_of, n_kw, n_dk, n_k, p.alpha, p.beta))))
    phi, theta = _estimates(n_kw, n_dk, p.alpha, p.beta)
    empty = np.flatnonzero(lengths == 0)
    theta[empty] = 1.0 / p.K
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    assignments = [z[offsets[d]:offsets[d + 1]].copy() for d in range(D)]
    return TopicModel(terms=list(corpus.vocab.terms), doc_ids=list(corpus.doc_ids), phi=phi,
                      theta=theta, n_kw=n_kw, n_dk=n_dk, assignments=assignments, params=p,
                      empty_docs=[corpus.doc_ids[i] for i in empty], trace=trace)


def rebuild_counts(model: TopicModel, corpus: Corpus):
    """Recount (n_kw, n_dk) from the stored token assignments."""
    n_kw = np.zeros_like(model.n_kw)
    n_dk = np.zeros_like(model.n_dk)
    for d, (ids, z) in enumerate(zip(corpus.docs, model.assignments)):
        np.add.at(n_kw, (z, ids), 1)
        np.add.at(n_dk[d], z, 1)
    return n_kw, n_dk


def _check_topic(model, k):
    if not 0 <= k < model.K:
        raise IndexError(f"topic index {k} out of range [0, {model.K})")


def top_words(model: TopicModel, k: int, n: int = 12) -> list:
    _check_topic(model, k)
    row = model.phi[k]
    order = sorted(range(len(row)), key=lambda j: (-row[j], model.terms[j]))
    return [(model.terms[j], float(row[j])) for j in order[:n]]


def top_documents(model: TopicModel, k: int, n: int = 10) -> list:
    _check_topic(model, k)
    empty = set(model.empty_docs)
    col = model.theta[:, k]
    candidates = [d for d in range(len(col)) if model.doc_ids[d] not in empty]
    order = sorted(candidates, key=lambda d: (-col[d], model.doc_ids[d]))
    return [(model.doc_ids[d], float(col[d])) for d in order[:n]]


def log_likelihood(model: TopicModel, corpus: Corpus) -> float:
    """Sum over tokens of ln sum_k theta[d,k] * phi[k,w]."""
    if list(corpus.vocab.terms) != list(model.terms) or len(corpus.docs) != model.theta.shape[0]:
        raise ValidationError("corpus does not match the model's vocabulary or documents")
    ll = 0.0
    for d, ids in enumerate(corpus.docs):
        if len(ids):
            ll += float(np.sum(np.log(model.theta[d] @ model.phi[:, ids])))
    return ll


def params_dict(p: LdaParams) -> dict:
    return asdict(p)
