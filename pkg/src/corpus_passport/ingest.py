"""Document loading, language filtering and synthetic fixtures."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import ConfigurationError, ValidationError

log = logging.getLogger(__name__)

LANG_OVERLAP_THRESHOLD = 0.06
LANG_MIN_TOKENS = 5

OPTIONAL_FIELDS = ("lang", "author", "timestamp")


@dataclass(frozen=True)
class RawDocument:
    id: str
    text: str
    lang: Optional[str] = None
    author: Optional[str] = None
    timestamp: Optional[str] = None
    # fixture-only labels (group, mixture weights, token topics)
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def to_record(self) -> dict:
        rec = {"id": self.id, "text": self.text}
        for name in OPTIONAL_FIELDS:
            value = getattr(self, name)
            if value is not None:
                rec[name] = value
        if self.meta:
            rec["meta"] = self.meta
        return rec


@dataclass(frozen=True)
class Reject:
    line_no: int
    reason: str
    line: str


@dataclass(frozen=True)
class DocumentSet:
    docs: tuple
    source: str = ""
    rejects: tuple = ()

    @property
    def total_count(self) -> int:
        return len(self.docs)

    def __len__(self):
        return len(self.docs)

    def __iter__(self) -> Iterator[RawDocument]:
        return iter(self.docs)

    def ids(self) -> list:
        return [d.id for d in self.docs]


def _check_unique(docs) -> None:
    seen = set()
    for d in docs:
        if d.id in seen:
            raise ValidationError(f"duplicate document id: {d.id!r}")
        seen.add(d.id)


def make_document_set(docs, source="") -> DocumentSet:
    docs = tuple(docs)
    for d in docs:
        if not d.id:
            raise ValidationError("document id must be non-empty")
    _check_unique(docs)
    return DocumentSet(docs=docs, source=source)


def _parse_record(line: str) -> RawDocument:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    doc_id, text = obj.get("id"), obj.get("text")
    if not isinstance(doc_id, str) or not doc_id:
        raise ValueError("missing or invalid 'id'")
    if not isinstance(text, str):
        raise ValueError("missing or invalid 'text'")
    extra = {}
    for name in OPTIONAL_FIELDS:
        value = obj.get(name)
        if value is not None and not isinstance(value, str):
            raise ValueError(f"field {name!r} must be a string")
        extra[name] = value
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict):
        raise ValueError("field 'meta' must be an object")
    return RawDocument(id=doc_id, text=text, meta=meta, **extra)


def load_jsonl(path) -> DocumentSet:
    """Read one JSON object per line.

    Lines that fail to parse or miss required fields land in ``rejects``;
    a repeated id raises ``ValidationError``.
    """
    path = Path(path)
    docs, rejects, seen = [], [], set()
    with path.open("r", encoding="utf-8", newline="") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            try:
                doc = _parse_record(line)
            except ValueError as exc:
                rejects.append(Reject(line_no, str(exc), line))
                continue
            if doc.id in seen:
                raise ValidationError(f"duplicate document id {doc.id!r} at line {line_no}")
            seen.add(doc.id)
            docs.append(doc)
    if rejects:
        log.warning("%s: %d line(s) rejected", path, len(rejects))
    return DocumentSet(docs=tuple(docs), source=str(path), rejects=tuple(rejects))


def dump_jsonl(doc_set: DocumentSet, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for doc in doc_set.docs:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")


def stopword_overlap(text: str, lang: str) -> tuple:
    """Return (fraction of word tokens that are stopwords, word token count)."""
    from .preprocess import Kind, language_stopwords, tokenize

    stop = language_stopwords(lang)
    words = [t.surface for t in tokenize(text) if t.kind is Kind.WORD]
    if not words:
        return 0.0, 0
    hits = sum(1 for w in words if w in stop)
    return hits / len(words), len(words)


def filter_language(doc_set: DocumentSet, lang: str,
                    threshold: float = LANG_OVERLAP_THRESHOLD,
                    min_tokens: int = LANG_MIN_TOKENS) -> DocumentSet:
    """Keep documents in ``lang``.

    The ``lang`` tag wins when present. Untagged documents with at least
    ``min_tokens`` word tokens need a stopword overlap of ``threshold``;
    shorter untagged documents are kept.
    """
    from .preprocess import known_languages

    if lang not in known_languages():
        raise ConfigurationError(f"unknown language code {lang!r}; known: {sorted(known_languages())}")
    kept = []
    for doc in doc_set.docs:
        if doc.lang is not None:
            if doc.lang == lang:
                kept.append(doc)
            continue
        score, n_words = stopword_overlap(doc.text, lang)
        if n_words < min_tokens or score >= threshold:
            kept.append(doc)
    return DocumentSet(docs=tuple(kept), source=doc_set.source, rejects=doc_set.rejects)


# --- synthetic fixtures ---------------------------------------------------

PROFILES = ("zipfian", "two_group", "planted_topics")

_SYLLABLES = [c + v for c in "bdfgklmnprstvz" for v in "aeiou"]
_FUNCTION_WORDS = ["the", "and", "is", "of", "to", "in", "a", "with", "for", "on"]
_CONTRACTIONS = ["isn't", "don't", "can't", "won't", "didn't"]


def synthetic_word(i: int) -> str:
    """Deterministic pronounceable 6-letter word; injective for i < 70**3."""
    n = len(_SYLLABLES)
    return _SYLLABLES[i % n] + _SYLLABLES[(i // n) % n] + _SYLLABLES[(i // (n * n)) % n]


def synthetic_vocabulary(size: int, offset: int = 0) -> list:
    return [synthetic_word(offset + i) for i in range(size)]


def _decorate(rng, words, idx):
    """Sprinkle platform tokens, casing and punctuation around content words."""
    out = list(words)
    if out and rng.random() < 0.5:
        out[0] = out[0].capitalize()
    if rng.random() < 0.3:
        out.insert(int(rng.integers(0, len(out) + 1)), rng.choice(_CONTRACTIONS))
    if rng.random() < 0.4:
        out.append(f"#Tag{int(rng.integers(0, 20))}")
    if rng.random() < 0.3:
        out.insert(0, f"@user_{int(rng.integers(0, 50))}")
    if rng.random() < 0.2:
        out.insert(0, "RT")
    if rng.random() < 0.3:
        out.append(f"https://t.co/{idx:06x}")
    text = " ".join(out)
    if rng.random() < 0.4:
        text += rng.choice(["!", "!!", ".", "?", " :)", " <3"])
    return text


def _zipfian(rng, n_docs, vocab_size, doc_length):
    vocab = synthetic_vocabulary(vocab_size)
    ranks = np.arange(1, vocab_size + 1)
    probs = (1.0 / ranks) / np.sum(1.0 / ranks)
    draws = rng.choice(vocab_size, size=(n_docs, doc_length), p=probs)
    return [RawDocument(id=f"z{i:06d}", text=" ".join(vocab[j] for j in row), lang="en")
            for i, row in enumerate(draws)]


def _two_group(rng, n_docs, vocab_size, doc_length):
    groups = [synthetic_vocabulary(vocab_size, 1000), synthetic_vocabulary(vocab_size, 2000)]
    docs = []
    for i in range(n_docs):
        g = i % 2
        words = []
        for _ in range(doc_length):
            words.append(groups[g][int(rng.integers(vocab_size))])
            if rng.random() < 0.3:
                words.append(_FUNCTION_WORDS[int(rng.integers(len(_FUNCTION_WORDS)))])
        docs.append(RawDocument(id=f"g{i:06d}", text=_decorate(rng, words, i), lang="en",
                                meta={"group": g}))
    return docs


def _planted_topics(rng, n_docs, vocab_size, doc_length):
    topics = [synthetic_vocabulary(vocab_size, 3000), synthetic_vocabulary(vocab_size, 4000)]
    docs = []
    for i in range(n_docs):
        weight = float(rng.random())
        labels = (rng.random(doc_length) >= weight).astype(int)
        words, token_topics = [], []
        for z in labels:
            words.append(topics[z][int(rng.integers(vocab_size))])
            token_topics.append(int(z))
            if rng.random() < 0.2:
                words.append(_FUNCTION_WORDS[int(rng.integers(len(_FUNCTION_WORDS)))])
        meta = {"weights": [weight, 1.0 - weight], "token_topics": token_topics}
        docs.append(RawDocument(id=f"t{i:06d}", text=_decorate(rng, words, i), lang="en", meta=meta))
    return docs


_DEFAULT_SHAPE = {
    "zipfian": (1000, 20),
    "two_group": (30, 15),
    "planted_topics": (50, 25),
}


def generate_fixture(seed: int, n_docs: int, profile: str,
                     vocab_size: Optional[int] = None,
                     doc_length: Optional[int] = None) -> DocumentSet:
    """Build a deterministic synthetic corpus.

    ``zipfian`` draws every token from an exact 1/rank law over
    ``vocab_size`` types. ``two_group`` alternates documents between two
    disjoint vocabularies (plus shared function words). ``planted_topics``
    mixes two disjoint vocabularies with a per-document weight; the weight
    and per-token topic labels are kept in ``meta``.
    """
    if n_docs < 1:
        raise ValidationError("n_docs must be >= 1")
    if profile not in PROFILES:
        raise ValidationError(f"unknown fixture profile {profile!r}")
    default_v, default_len = _DEFAULT_SHAPE[profile]
    vocab_size = vocab_size or default_v
    doc_length = doc_length or default_len
    rng = np.random.default_rng(seed)
    builder = {"zipfian": _zipfian, "two_group": _two_group, "planted_topics": _planted_topics}[profile]
    docs = builder(rng, n_docs, vocab_size, doc_length)
    return DocumentSet(docs=tuple(docs), source=f"fixture:{profile}:{seed}:{n_docs}")


def fixture_vocabularies(profile: str, vocab_size: Optional[int] = None) -> list:
    """The planted vocabularies a fixture profile draws content words from."""
    size = vocab_size or _DEFAULT_SHAPE[profile][0]
    if profile == "zipfian":
        return [synthetic_vocabulary(size)]
    offsets = (1000, 2000) if profile == "two_group" else (3000, 4000)
    return [synthetic_vocabulary(size, off) for off in offsets]
