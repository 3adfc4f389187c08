import pytest

from corpus_passport.ingest import RawDocument, make_document_set
from corpus_passport.preprocess import StopwordLists, build_variant

HAND_TEXTS = [
    "great new design #mab16",
    "great design @alice http://t.co/x",
    "design isn't new",
]


@pytest.fixture(scope="session")
def lists():
    return StopwordLists.default()


@pytest.fixture(scope="session")
def hand_set():
    return make_document_set(RawDocument(id=f"d{i}", text=t) for i, t in enumerate(HAND_TEXTS))


@pytest.fixture(scope="session")
def hand_a(hand_set, lists):
    return build_variant(hand_set, "A", lists)


FAST_CONFIG = {
    "embed": {"dim": 16, "epochs": 2, "min_count": 2},
    "lda": {"K": 3, "iterations": 40, "burn_in": 20},
    "som_epochs": 3,
    "n_queries": 2,
    "neighbors": 8,
    "tsne": {"perplexity": 3, "iterations": 150},
}


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    from corpus_passport.cli import main
    from corpus_passport.ingest import dump_jsonl, generate_fixture

    root = tmp_path_factory.mktemp("corpus")
    dump_jsonl(generate_fixture(5, 300, "planted_topics"), root / "docs.jsonl")
    assert main(["ingest", "--input", str(root / "docs.jsonl"), "--out", str(root / "c")]) == 0
    return root / "c"
