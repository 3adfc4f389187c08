"""Corpus-structure ratios, term frequencies, Zipf fit and n-gram tables."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import UnknownTermError, ValidationError
from .preprocess import Corpus, Kind, SPECIAL_KINDS, StopwordLists

MEANINGFUL_MIN_LENGTH = 4
DEFAULT_ZIPF_MAX_RANK = 1000


@dataclass(frozen=True)
class StructureStats:
    total_tokens: int
    unique_terms: int
    unique_ratio: float
    special_count: int
    special_fraction_all: float
    meaningful_count: int
    special_to_meaningful: Optional[float]
    # special / (special + meaningful), the other reading of the ratio
    special_share_of_content: float

    def to_dict(self):
        return asdict(self)


def _sort_key(item):
    key, count = item
    return (-count, key)


@dataclass(frozen=True)
class FrequencyTable:
    """(term, count) entries, count descending then term ascending.

    ``total`` is the token count of the whole variant, so relative
    frequencies stay correct after truncation.
    """

    entries: tuple
    total: int

    @classmethod
    def from_counts(cls, counts, total=None, top_k=None):
        entries = sorted(((t, int(c)) for t, c in counts.items() if c > 0), key=_sort_key)
        if total is None:
            total = sum(c for _, c in entries)
        if top_k is not None:
            entries = entries[:top_k]
        return cls(entries=tuple(entries), total=int(total))

    def __len__(self):
        return len(self.entries)

    def counts(self):
        return [c for _, c in self.entries]

    def terms(self):
        return [t for t, _ in self.entries]

    def rank_of(self, term) -> Optional[int]:
        for i, (t, _) in enumerate(self.entries):
            if t == term:
                return i + 1
        return None


@dataclass(frozen=True)
class ZipfFit:
    slope: float
    intercept: float
    r_squared: float
    ranks_used: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class NGramTable:
    n: int
    entries: tuple
    total: int

    def as_dict(self):
        return dict(self.entries)


def corpus_structure(corpus_a: Corpus, lists: Optional[StopwordLists] = None) -> StructureStats:
    """Uniqueness and special-token ratios of a variant-A corpus.

    Meaningful words are word tokens of at least four characters outside
    both stopword lists.
    """
    lists = lists or corpus_a.stopword_lists or StopwordLists.default()
    total = sum(len(d) for d in corpus_a.docs)
    if total == 0:
        raise ValidationError("undefined ratios on empty corpus")
    terms = corpus_a.vocab.terms
    special = meaningful = 0
    word_code, special_codes = Kind.WORD.value, {k.value for k in SPECIAL_KINDS}
    for ids, kinds in zip(corpus_a.docs, corpus_a.kinds):
        for j, code in zip(ids, kinds):
            if code in special_codes:
                special += 1
            elif code == word_code:
                term = terms[j]
                if len(term) >= MEANINGFUL_MIN_LENGTH and term not in lists:
                    meaningful += 1
    unique = sum(1 for c in corpus_a.vocab.counts if c > 0)
    return StructureStats(
        total_tokens=total,
        unique_terms=unique,
        unique_ratio=unique / total,
        special_count=special,
        special_fraction_all=special / total,
        meaningful_count=meaningful,
        special_to_meaningful=special / meaningful if meaningful else None,
        special_share_of_content=special / (special + meaningful) if special + meaningful else 0.0,
    )


def term_frequency(corpus: Corpus, top_k: Optional[int] = None) -> FrequencyTable:
    if top_k is not None and top_k < 1:
        raise ValidationError("top_k must be >= 1")
    counts = dict(zip(corpus.vocab.terms, corpus.vocab.counts.tolist()))
    return FrequencyTable.from_counts(counts, total=corpus.vocab.total_tokens, top_k=top_k)


def zipf_fit(table, max_rank: int = DEFAULT_ZIPF_MAX_RANK) -> ZipfFit:
    """Least-squares line through (log10 rank, log10 count).

    ``table`` may be a FrequencyTable or a plain sequence of counts sorted
    descending. A perfectly flat table fits with slope 0 and r_squared 1.
    """
    counts = table.counts() if isinstance(table, FrequencyTable) else list(table)
    counts = [c for c in counts if c >= 1]
    if len(counts) < 3:
        raise ValidationError("insufficient ranks for a Zipf fit (need >= 3)")
    n = min(max_rank, len(counts))
    x = np.log10(np.arange(1, n + 1, dtype=np.float64))
    y = np.log10(np.asarray(counts[:n], dtype=np.float64))
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    intercept = ym - slope * xm
    if syy <= 1e-300:
        r2 = 1.0
    else:
        resid = y - (intercept + slope * x)
        r2 = 1.0 - float(np.sum(resid ** 2)) / syy
        r2 = min(1.0, max(0.0, r2))
    return ZipfFit(slope=float(slope), intercept=float(intercept), r_squared=r2, ranks_used=n)


def _count_ngrams(corpus: Corpus, n: int) -> Counter:
    counter = Counter()
    terms = corpus.vocab.terms
    for ids in corpus.docs:
        if len(ids) < n:
            continue
        seq = [terms[j] for j in ids]
        counter.update(zip(*(seq[k:] for k in range(n))))
    return counter


def ngrams(corpus: Corpus, n: int, top_k: Optional[int] = None) -> NGramTable:
    """Adjacent n-grams inside documents, never spanning two documents."""
    if n not in (2, 3):
        raise ValidationError(f"n must be 2 or 3, got {n}")
    counter = _count_ngrams(corpus, n)
    entries = sorted(counter.items(), key=_sort_key)
    total = sum(counter.values())
    if top_k is not None:
        entries = entries[:top_k]
    return NGramTable(n=n, entries=tuple(entries), total=total)


def cooccurrence_around(corpus: Corpus, term: str, top_k: int = 10, *,
                        _tables=None) -> list:
    """Bigrams and trigrams that contain ``term``, most frequent first."""
    if term not in corpus.vocab:
        raise UnknownTermError(f"term {term!r} not in vocabulary")
    tables = _tables or (_count_ngrams(corpus, 2), _count_ngrams(corpus, 3))
    hits = [(g, c) for table in tables for g, c in table.items() if term in g]
    hits.sort(key=_sort_key)
    return hits[:top_k]


def cooccurrence_table(corpus: Corpus, terms, top_k: int = 10) -> dict:
    """``cooccurrence_around`` for many terms, counting n-grams once."""
    tables = (_count_ngrams(corpus, 2), _count_ngrams(corpus, 3))
    return {t: cooccurrence_around(corpus, t, top_k, _tables=tables) for t in terms}


def compare_frequencies(a: FrequencyTable, b: FrequencyTable, terms) -> list:
    """Per term: (term, rank in a, rank in b, relative freq in a, relative freq in b)."""
    def lookup(table):
        ranks = {t: i + 1 for i, (t, _) in enumerate(table.entries)}
        counts = dict(table.entries)
        return ranks, counts

    ra, ca = lookup(a)
    rb, cb = lookup(b)
    rows = []
    for t in terms:
        fa = ca.get(t, 0) / a.total if a.total else 0.0
        fb = cb.get(t, 0) / b.total if b.total else 0.0
        rows.append((t, ra.get(t), rb.get(t), fa, fb))
    return rows


def zipf_expected_counts(fit: ZipfFit, ranks) -> list:
    return [10 ** (fit.intercept + fit.slope * math.log10(r)) for r in ranks]
