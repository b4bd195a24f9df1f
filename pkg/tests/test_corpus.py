"""Tokenizer, word counting, and vocabulary selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from followsim.corpus import (
    TokenCounts,
    build_vocabulary,
    count_words,
    restrict_counts,
    tokenize,
)
from followsim.ingest import UserDocument


class TestTokenize:
    def test_empty_string(self):
        assert tokenize("") == []

    def test_punctuation_stripped_and_lowercased(self):
        assert tokenize("Hello, world!") == ["hello", "world"]

    def test_url_collapses_to_sentinel(self):
        assert tokenize("check https://x.y now") == ["check", "<url>", "now"]

    def test_www_urls_and_embedded_urls(self):
        assert tokenize("WWW.EXAMPLE.COM") == ["<url>"]
        assert tokenize("(https://a.b/c)") == ["<url>"]

    def test_mentions(self):
        assert tokenize("ping @Alice!") == ["ping", "<mention>"]
        # a bare @ is just punctuation
        assert tokenize("a @ b") == ["a", "b"]

    def test_punctuation_only_tokens_dropped(self):
        assert tokenize("... -- !?") == []

    def test_interior_punctuation_kept(self):
        assert tokenize("don't stop") == ["don't", "stop"]

    def test_unicode(self):
        assert tokenize("Café, über!") == ["café", "über"]

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_deterministic_and_normalized(self, text):
        first = tokenize(text)
        assert first == tokenize(text)
        for token in first:
            assert token
            assert token == token.lower()


class TestCountWords:
    def test_hand_count(self):
        doc = UserDocument("u1", ["a a b"])
        assert count_words(doc).counts == {"a": 2, "b": 1}

    def test_empty_texts(self):
        assert count_words(UserDocument("u1", [])).counts == {}

    def test_aggregates_across_posts(self):
        doc = UserDocument("u1", ["a", "a"])
        assert count_words(doc).counts == {"a": 2}


class TestBuildVocabulary:
    def test_hand_aggregation(self):
        users = [TokenCounts("u1", {"a": 3, "b": 1}), TokenCounts("u2", {"b": 3})]
        vocab = build_vocabulary(users, v_max=1)
        assert vocab.words == ("b",)
        assert vocab.counts == {"b": 4}
        assert vocab.total == 4

    def test_no_truncation_when_v_max_large(self):
        users = [TokenCounts("u1", {"a": 3, "b": 1})]
        vocab = build_vocabulary(users, v_max=99)
        assert set(vocab.words) == {"a", "b"}
        assert vocab.total == 4

    def test_lexicographic_tie_break(self):
        vocab = build_vocabulary([TokenCounts("u", {"a": 2, "b": 2})], v_max=1)
        assert vocab.words == ("a",)

    def test_rank_order_non_increasing(self):
        users = [TokenCounts("u", {"x": 5, "y": 9, "z": 5, "w": 1})]
        vocab = build_vocabulary(users, v_max=3)
        assert vocab.words == ("y", "x", "z")
        counts = [vocab.counts[w] for w in vocab.words]
        assert counts == sorted(counts, reverse=True)

    def test_v_max_must_be_positive(self):
        with pytest.raises(ValueError):
            build_vocabulary([], v_max=0)

    @given(
        st.lists(
            st.dictionaries(
                st.text(st.characters(codec="ascii", categories=["L"]), min_size=1, max_size=4),
                st.integers(min_value=1, max_value=50),
                max_size=6,
            ),
            max_size=6,
        ),
        st.integers(min_value=1, max_value=8),
        st.randoms(),
    )
    @settings(max_examples=150, deadline=None)
    def test_order_invariance(self, count_maps, v_max, rand):
        counts = [TokenCounts(f"u{i}", m) for i, m in enumerate(count_maps)]
        baseline = build_vocabulary(counts, v_max)
        shuffled = list(counts)
        rand.shuffle(shuffled)
        again = build_vocabulary(shuffled, v_max)
        assert baseline.words == again.words
        assert baseline.counts == again.counts
        assert baseline.total == again.total

    def test_d_consistency(self):
        rng = np.random.default_rng(11)
        counts = [
            TokenCounts(
                f"u{i}",
                {
                    f"w{j}": int(rng.integers(1, 20))
                    for j in rng.choice(40, size=rng.integers(1, 15), replace=False)
                },
            )
            for i in range(25)
        ]
        vocab = build_vocabulary(counts, v_max=10)
        total_from_users = sum(
            restrict_counts(tc, vocab).total_in_vocab for tc in counts
        )
        assert total_from_users == vocab.total


class TestRestrictCounts:
    def test_restriction_and_total(self):
        vocab = build_vocabulary([TokenCounts("u", {"a": 2, "b": 1})], v_max=1)
        restricted = restrict_counts(TokenCounts("x", {"a": 5, "c": 2}), vocab)
        assert restricted.counts == {"a": 5}
        assert restricted.total_in_vocab == 5
