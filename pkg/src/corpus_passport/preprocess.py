"""Tokenization and the three corpus variants (A, B, C)."""
from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import ValidationError


class Kind(enum.Enum):
    WORD = "W"
    HASHTAG = "H"
    MENTION = "M"
    URL = "U"
    EMOTICON = "E"
    NUMBER = "N"
    PUNCT = "P"


_KIND_BY_CODE = {k.value: k for k in Kind}
SPECIAL_KINDS = frozenset({Kind.HASHTAG, Kind.MENTION})
DROPPED_IN_B = frozenset({Kind.HASHTAG, Kind.MENTION, Kind.URL, Kind.PUNCT})
VARIANTS = ("A", "B", "C")


@dataclass(frozen=True)
class Token:
    surface: str
    kind: Kind

    def __repr__(self):
        return f"{self.surface}/{self.kind.name.capitalize()}"


def _data_lines(name: str) -> list:
    text = resources.files("corpus_passport.data").joinpath(name).read_text(encoding="utf-8")
    return [ln for ln in text.splitlines() if ln.strip()]


@lru_cache(maxsize=None)
def emoticons() -> tuple:
    return tuple(_data_lines("emoticons.txt"))


@lru_cache(maxsize=None)
def negation_table() -> dict:
    table = {}
    for ln in _data_lines("negations.tsv"):
        short, long = ln.split("\t")
        table[short] = tuple(long.split())
    return table


@lru_cache(maxsize=None)
def known_languages() -> frozenset:
    names = resources.files("corpus_passport.data").iterdir()
    return frozenset(p.name[len("stopwords_"):-4] for p in names
                     if p.name.startswith("stopwords_") and p.name != "stopwords_platform.txt")


@lru_cache(maxsize=None)
def language_stopwords(lang: str) -> frozenset:
    if lang not in known_languages():
        raise ValidationError(f"no stopword list for language {lang!r}")
    return frozenset(_data_lines(f"stopwords_{lang}.txt"))


@dataclass(frozen=True)
class StopwordLists:
    english: frozenset
    platform: frozenset

    @classmethod
    def default(cls) -> "StopwordLists":
        return cls(english=language_stopwords("en"),
                   platform=frozenset(_data_lines("stopwords_platform.txt")))

    def __post_init__(self):
        object.__setattr__(self, "english", frozenset(w.lower() for w in self.english))
        object.__setattr__(self, "platform", frozenset(w.lower() for w in self.platform))

    def __contains__(self, word):
        return word in self.english or word in self.platform

    def hashes(self) -> dict:
        def h(words):
            return hashlib.sha256("\n".join(sorted(words)).encode("utf-8")).hexdigest()
        return {"english": h(self.english), "platform": h(self.platform)}


# --- tokenizer --------------------------------------------------------------

_EMOJI_RANGES = (
    "\U0001F000-\U0001FAFF"   # mahjong .. symbols & pictographs extended-A
    "☀-➿"           # misc symbols, dingbats
    "⬀-⯿"           # arrows, stars
    "⌀-⏿"           # misc technical (watch, hourglass)
)
_EMOJI_TAIL = "️‍\U0001F3FB-\U0001F3FF"


def _build_pattern():
    emo = sorted(emoticons(), key=len, reverse=True)
    emo_alt = "|".join(re.escape(e) for e in emo)
    parts = [
        ("URL", r"https?://\S+"),
        ("MENTION", r"@[a-z0-9_]+"),
        ("HASHTAG", r"#[a-z0-9_]+"),
        ("EMOTICON", rf"(?<!\w)(?:{emo_alt})(?!\w)|[{_EMOJI_RANGES}][{_EMOJI_TAIL}]*"),
        ("NUMBER", r"[0-9]+(?:[.,][0-9]+)?"),
        ("WORD", r"[^\W\d_][^\W\d_'’]*(?:['’][^\W\d_'’]*)*"),
        ("PUNCT", r"\S"),
    ]
    return re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in parts), re.IGNORECASE)


_PATTERN = None


def _pattern():
    global _PATTERN
    if _PATTERN is None:
        _PATTERN = _build_pattern()
    return _PATTERN


_LOWERED = frozenset({Kind.WORD, Kind.HASHTAG, Kind.MENTION})


def tokenize(text: str) -> list:
    """Split ``text`` into typed tokens.

    Recognition order is URL, mention, hashtag, emoticon, number, word,
    punctuation. Adjacent punctuation characters merge into one token.
    Word, hashtag and mention surfaces are lowercased; nothing is stemmed.
    """
    tokens = []
    prev_end = -1
    for m in _pattern().finditer(text):
        kind = Kind[m.lastgroup]
        surface = m.group()
        if kind is Kind.PUNCT and tokens and tokens[-1].kind is Kind.PUNCT and prev_end == m.start():
            tokens[-1] = Token(tokens[-1].surface + surface, Kind.PUNCT)
        else:
            if kind in _LOWERED:
                surface = surface.lower().replace("’", "'")
            tokens.append(Token(surface, kind))
        prev_end = m.end()
    return tokens


def expand_negations(tokens: Iterable[Token]) -> list:
    table = negation_table()
    out = []
    for tok in tokens:
        parts = table.get(tok.surface) if tok.kind is Kind.WORD else None
        if parts:
            out.extend(Token(p, Kind.WORD) for p in parts)
        else:
            out.append(tok)
    return out


def stopword_filter(tokens: Iterable[Token], lists: StopwordLists) -> list:
    return [t for t in tokens if not (t.kind is Kind.WORD and t.surface in lists)]


def variant_tokens(text: str, variant: str, lists: StopwordLists) -> list:
    tokens = expand_negations(tokenize(text))
    if variant == "A":
        return tokens
    tokens = [t for t in tokens if t.kind not in DROPPED_IN_B]
    if variant == "B":
        return tokens
    if variant == "C":
        return stopword_filter(tokens, lists)
    raise ValidationError(f"unknown variant {variant!r}")


# --- corpus -----------------------------------------------------------------

@dataclass
class Vocabulary:
    terms: list
    counts: np.ndarray
    term_to_id: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.term_to_id is None:
            self.term_to_id = {t: i for i, t in enumerate(self.terms)}

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.term_to_id

    @property
    def total_tokens(self) -> int:
        return int(self.counts.sum())

    def id(self, term: str) -> int:
        return self.term_to_id[term]


@dataclass
class Corpus:
    """Token-id sequences per document plus the shared vocabulary.

    ``kinds`` holds one ``Kind`` code string per document, aligned with the
    token ids, so that kind-aware statistics do not need to re-tokenize.
    """

    variant: str
    vocab: Vocabulary
    doc_ids: list
    docs: list
    kinds: list
    stopword_lists: Optional[StopwordLists] = None

    @property
    def V(self) -> int:
        return len(self.vocab)

    def __len__(self):
        return len(self.docs)

    def doc_terms(self, i: int) -> list:
        terms = self.vocab.terms
        return [terms[j] for j in self.docs[i]]

    def token_kinds(self, i: int) -> list:
        return [_KIND_BY_CODE[c] for c in self.kinds[i]]

    def iter_term_docs(self):
        for i in range(len(self.docs)):
            yield self.doc_terms(i)


def build_variant(doc_set, variant: str, lists: Optional[StopwordLists] = None) -> Corpus:
    """Tokenize every document and materialize one variant.

    Term ids follow first occurrence over documents in input order, so the
    result is a pure function of the inputs.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    lists = lists or StopwordLists.default()
    term_to_id, terms, counts = {}, [], []
    doc_ids, docs, kinds = [], [], []
    for doc in doc_set:
        toks = variant_tokens(doc.text, variant, lists)
        ids = np.empty(len(toks), dtype=np.int32)
        for k, tok in enumerate(toks):
            j = term_to_id.get(tok.surface)
            if j is None:
                j = term_to_id[tok.surface] = len(terms)
                terms.append(tok.surface)
                counts.append(0)
            counts[j] += 1
            ids[k] = j
        doc_ids.append(doc.id)
        docs.append(ids)
        kinds.append("".join(t.kind.value for t in toks))
    vocab = Vocabulary(terms=terms, counts=np.array(counts, dtype=np.int64), term_to_id=term_to_id)
    return Corpus(variant=variant, vocab=vocab, doc_ids=doc_ids, docs=docs, kinds=kinds,
                  stopword_lists=lists)


def corpus_from_token_lists(token_lists, variant="A", doc_ids=None, kinds=None,
                            lists: Optional[StopwordLists] = None) -> Corpus:
    """Build a corpus from pre-tokenized surfaces (kinds inferred by re-tokenizing each surface)."""
    term_to_id, terms, counts = {}, [], []
    docs, kind_codes = [], []
    for d, toks in enumerate(token_lists):
        ids = np.empty(len(toks), dtype=np.int32)
        codes = []
        for k, surface in enumerate(toks):
            j = term_to_id.get(surface)
            if j is None:
                j = term_to_id[surface] = len(terms)
                terms.append(surface)
                counts.append(0)
            counts[j] += 1
            ids[k] = j
            if kinds is None:
                parsed = tokenize(surface)
                codes.append(parsed[0].kind.value if len(parsed) == 1 else Kind.WORD.value)
        docs.append(ids)
        kind_codes.append("".join(codes) if kinds is None else kinds[d])
    if doc_ids is None:
        doc_ids = [str(i) for i in range(len(docs))]
    vocab = Vocabulary(terms=terms, counts=np.array(counts, dtype=np.int64), term_to_id=term_to_id)
    return Corpus(variant=variant, vocab=vocab, doc_ids=list(doc_ids), docs=docs, kinds=kind_codes,
                  stopword_lists=lists or StopwordLists.default())


# --- persistence --------------------------------------------------------------

def save_corpus(corpus: Corpus, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "vocab.tsv").open("w", encoding="utf-8", newline="\n") as fh:
        for i, (term, count) in enumerate(zip(corpus.vocab.terms, corpus.vocab.counts)):
            fh.write(f"{i}\t{term}\t{int(count)}\n")
    with (out / "docs.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for doc_id, ids, kinds in zip(corpus.doc_ids, corpus.docs, corpus.kinds):
            fh.write(json.dumps({"id": doc_id, "tokens": ids.tolist(), "kinds": kinds},
                                ensure_ascii=False) + "\n")
    lists = corpus.stopword_lists or StopwordLists.default()
    meta = {
        "variant": corpus.variant,
        "n_docs": len(corpus.docs),
        "vocab_size": corpus.V,
        "total_tokens": corpus.vocab.total_tokens,
        "stopword_hashes": lists.hashes(),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_corpus(corpus_dir) -> Corpus:
    src = Path(corpus_dir)
    meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
    terms, counts = [], []
    with (src / "vocab.tsv").open(encoding="utf-8") as fh:
        for line in fh:
            idx, term, count = line.rstrip("\n").split("\t")
            if int(idx) != len(terms):
                raise ValidationError(f"{src / 'vocab.tsv'}: ids are not dense at {idx}")
            terms.append(term)
            counts.append(int(count))
    doc_ids, docs, kinds = [], [], []
    with (src / "docs.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            doc_ids.append(rec["id"])
            docs.append(np.asarray(rec["tokens"], dtype=np.int32))
            kinds.append(rec["kinds"])
    lists = StopwordLists.default()
    if meta.get("stopword_hashes") and meta["stopword_hashes"] != lists.hashes():
        raise ValidationError(f"{src}: stopword lists differ from the bundled ones")
    return Corpus(variant=meta["variant"], vocab=Vocabulary(terms=terms, counts=np.array(counts)),
                  doc_ids=doc_ids, docs=docs, kinds=kinds, stopword_lists=lists)
