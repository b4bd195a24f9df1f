"""File formats: corpus, edges, vocabulary, vectors, model artifacts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from followsim.corpus import Vocabulary
from followsim.embedding import EmbeddingModel, UserVector
from followsim.errors import (
    DuplicateUserError,
    FormatError,
    ModelIntegrityError,
    ModelVersionError,
    SelfLoopError,
)
from followsim.ingest import (
    MODEL_MAGIC,
    UserDocument,
    build_manifest,
    load_corpus,
    load_degree_overrides,
    load_edges,
    load_manifest,
    load_model,
    load_vectors,
    load_vocabulary,
    save_manifest,
    save_model,
    write_corpus,
    write_edges,
    write_vectors,
    write_vocabulary,
)


class TestCorpusFiles:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert load_corpus(path) == []

    def test_two_records_preserve_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"user_id": "u1", "texts": ["hi"]}\n'
            '{"user_id": "u2", "texts": []}\n'
        )
        docs = load_corpus(path)
        assert [d.user_id for d in docs] == ["u1", "u2"]
        assert docs[0].texts == ["hi"]
        assert docs[1].texts == []

    def test_duplicate_user_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"user_id": "u1", "texts": []}\n{"user_id": "u1", "texts": []}\n'
        )
        with pytest.raises(DuplicateUserError, match="u1"):
            load_corpus(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"user_id": "u1", "texts": []}\nnot json\n')
        with pytest.raises(FormatError, match="line 2"):
            load_corpus(path)

    def test_missing_fields_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"user_id": "", "texts": []}\n')
        with pytest.raises(FormatError):
            load_corpus(path)
        path.write_text('{"user_id": "u1", "texts": [1]}\n')
        with pytest.raises(FormatError):
            load_corpus(path)

    def test_round_trip_idempotent(self, tmp_path):
        docs = [
            UserDocument("u1", ["café post", "two"]),
            UserDocument("u2", []),
        ]
        first = tmp_path / "a.jsonl"
        second = tmp_path / "b.jsonl"
        write_corpus(docs, first)
        write_corpus(load_corpus(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_missing_file_reports_path(self, tmp_path):
        with pytest.raises(OSError, match="nope"):
            load_corpus(tmp_path / "nope.jsonl")


class TestEdgeFiles:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.tsv"
        path.write_text("")
        assert load_edges(path).n_edges == 0

    def test_dedup(self, tmp_path):
        path = tmp_path / "e.tsv"
        path.write_text("u1\tu2\nu1\tu2\n")
        graph = load_edges(path)
        assert graph.n_edges == 1

    def test_self_loop_reports_row(self, tmp_path):
        path = tmp_path / "e.tsv"
        path.write_text("u1\tu2\nu3\tu3\n")
        with pytest.raises(SelfLoopError, match="line 2"):
            load_edges(path)

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "e.tsv"
        path.write_text("u1\tu2\tu3\n")
        with pytest.raises(FormatError, match="2 tab-separated"):
            load_edges(path)

    def test_concat_with_itself_is_idempotent(self, tmp_path):
        edges = [("u1", "u2"), ("u2", "u3"), ("u1", "u3")]
        path = tmp_path / "e.tsv"
        write_edges(edges, path)
        doubled = tmp_path / "e2.tsv"
        doubled.write_bytes(path.read_bytes() + path.read_bytes())
        assert load_edges(doubled).n_edges == load_edges(path).n_edges

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=8),
                st.integers(min_value=0, max_value=8),
            ).filter(lambda p: p[0] != p[1]),
            max_size=30,
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_dedup_property(self, pairs):
        from followsim.graph import FollowGraph

        edges = [(f"u{a}", f"u{b}") for a, b in pairs]
        assert FollowGraph(edges + edges).n_edges == FollowGraph(edges).n_edges
        assert FollowGraph(edges).n_edges == len(set(edges))


class TestDegreeOverrides:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("u1\t10\t5\nu2\t0\t0\n")
        assert load_degree_overrides(path) == {"u1": (10, 5), "u2": (0, 0)}

    def test_bad_counts(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("u1\tten\t5\n")
        with pytest.raises(FormatError, match="line 1"):
            load_degree_overrides(path)


class TestManifest:
    def test_build_and_round_trip(self, tmp_path):
        write_corpus(
            [UserDocument("u1", ["a", "b"]), UserDocument("u2", ["c"])],
            tmp_path / "c.jsonl",
        )
        write_edges([("u1", "u2"), ("u2", "u3")], tmp_path / "e.tsv")
        manifest = build_manifest(tmp_path / "c.jsonl", tmp_path / "e.tsv")
        assert manifest.n_users == 2
        assert manifest.n_edges == 2
        assert manifest.n_posts == 3
        assert manifest.max_posts_per_user == 2
        assert manifest.graph_only_users == ["u3"]
        save_manifest(manifest, tmp_path / "m.json")
        assert load_manifest(tmp_path / "m.json") == manifest


class TestVocabularyFiles:
    def test_round_trip(self, tmp_path):
        vocab = Vocabulary(words=("b", "a"), counts={"b": 5, "a": 2}, total=7)
        path = tmp_path / "v.tsv"
        write_vocabulary(vocab, path)
        assert path.read_text() == "1\tb\t5\n2\ta\t2\n"
        back = load_vocabulary(path)
        assert back.words == vocab.words
        assert back.counts == vocab.counts
        assert back.total == vocab.total

    def test_out_of_order_rank_rejected(self, tmp_path):
        path = tmp_path / "v.tsv"
        path.write_text("2\tb\t5\n")
        with pytest.raises(FormatError):
            load_vocabulary(path)


class TestVectorFiles:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        vectors = [
            UserVector(f"u{i}", rng.standard_normal(7), "sample") for i in range(9)
        ]
        path = tmp_path / "v.tsv"
        write_vectors(vectors, path)
        back = load_vectors(path)
        for vec in vectors:
            assert np.array_equal(back[vec.user_id], vec.values)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "v.tsv"
        path.write_text("u1\t1.0\t2.0\nu2\t1.0\n")
        with pytest.raises(FormatError, match="line 2"):
            load_vectors(path)


def _random_model(rng, n_users=17, n_vocab=23, dims=5) -> EmbeddingModel:
    words = tuple(f"w{i:04d}" for i in range(n_vocab))
    counts = {w: int(rng.integers(1, 1000)) for w in words}
    vocab = Vocabulary(words=words, counts=counts, total=sum(counts.values()))
    sigma = np.sort(rng.random(dims))[::-1] + 0.5
    return EmbeddingModel(
        user_ids=tuple(f"u{i}" for i in range(n_users)),
        vocab=vocab,
        u=rng.standard_normal((n_users, dims)),
        w=rng.standard_normal((n_vocab, dims)),
        sigma=sigma,
        k=float(rng.random() + 0.5),
    )


def assert_models_equal(a: EmbeddingModel, b: EmbeddingModel) -> None:
    assert a.user_ids == b.user_ids
    assert a.vocab.words == b.vocab.words
    assert a.vocab.counts == b.vocab.counts
    assert a.vocab.total == b.vocab.total
    assert a.k == b.k
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.w, b.w)
    assert np.array_equal(a.sigma, b.sigma)


class TestModelArtifact:
    def test_round_trip_bit_exact(self, tmp_path):
        model = _random_model(np.random.default_rng(0))
        path = tmp_path / "m.bin"
        save_model(model, path)
        assert_models_equal(load_model(path), model)

    def test_unicode_words_round_trip(self, tmp_path):
        model = _random_model(np.random.default_rng(1), n_vocab=3)
        model.vocab.words = ("café", "über", "<url>")
        model.vocab.counts = {w: 7 for w in model.vocab.words}
        model.vocab.total = 21
        path = tmp_path / "m.bin"
        save_model(model, path)
        assert_models_equal(load_model(path), model)

    def test_truncated_file(self, tmp_path):
        model = _random_model(np.random.default_rng(2))
        path = tmp_path / "m.bin"
        save_model(model, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(ModelIntegrityError):
            load_model(path)

    def test_corrupted_payload(self, tmp_path):
        model = _random_model(np.random.default_rng(4))
        path = tmp_path / "m.bin"
        save_model(model, path)
        data = bytearray(path.read_bytes())
        data[len(data) // 2] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(ModelIntegrityError, match="checksum"):
            load_model(path)

    def test_version_mismatch(self, tmp_path):
        model = _random_model(np.random.default_rng(5))
        path = tmp_path / "m.bin"
        save_model(model, path)
        data = bytearray(path.read_bytes())
        data[len(MODEL_MAGIC)] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(ModelVersionError, match="99"):
            load_model(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"NOTMODEL" + b"\x01" + b"\x00" * 64)
        with pytest.raises(ModelIntegrityError, match="magic"):
            load_model(path)

    def test_trailing_garbage(self, tmp_path):
        model = _random_model(np.random.default_rng(6))
        path = tmp_path / "m.bin"
        save_model(model, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(ModelIntegrityError):
            load_model(path)

    def test_save_load_save_is_idempotent(self, tmp_path):
        model = _random_model(np.random.default_rng(7))
        first = tmp_path / "a.bin"
        second = tmp_path / "b.bin"
        save_model(model, first)
        save_model(load_model(first), second)
        assert first.read_bytes() == second.read_bytes()
