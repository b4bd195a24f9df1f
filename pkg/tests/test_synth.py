"""Synthetic generator: determinism, planted homophily, category shaping."""

import math

import pytest

from followsim.errors import InfeasibleSharesError
from followsim.graph import RatioCategory, classify_users
from followsim.ingest import load_corpus, load_edges
from followsim.synth import SynthConfig, generate, load_ground_truth


def _file_bytes(result):
    return (
        result.corpus_path.read_bytes(),
        result.edges_path.read_bytes(),
        result.ground_truth_path.read_bytes(),
    )


def _same_topic_fraction(result):
    truth = load_ground_truth(result.ground_truth_path)
    graph = load_edges(result.edges_path)
    same = total = 0
    for source, target in graph.edges():
        total += 1
        if truth[source][0] == truth[target][0]:
            same += 1
    return same / total, total


SMALL = dict(n_users=400, posts_per_user=4, words_per_post=6, vocab_per_topic=30)


class TestDeterminism:
    def test_identical_config_byte_identical(self, tmp_path):
        config = SynthConfig(seed=5, **SMALL)
        first = generate(config, tmp_path / "a")
        second = generate(SynthConfig(seed=5, **SMALL), tmp_path / "b")
        assert _file_bytes(first) == _file_bytes(second)

    def test_different_seed_differs(self, tmp_path):
        first = generate(SynthConfig(seed=5, **SMALL), tmp_path / "a")
        second = generate(SynthConfig(seed=6, **SMALL), tmp_path / "b")
        assert _file_bytes(first) != _file_bytes(second)


class TestPlantedHomophily:
    def test_h_zero_same_topic_fraction_near_uniform(self, tmp_path):
        config = SynthConfig(homophily=0.0, n_topics=8, seed=1, **SMALL)
        result = generate(config, tmp_path)
        fraction, total = _same_topic_fraction(result)
        expected = 1 / 8
        sigma = math.sqrt(expected * (1 - expected) / total)
        assert abs(fraction - expected) <= 3 * sigma

    def test_h_one_all_edges_same_topic(self, tmp_path):
        config = SynthConfig(homophily=1.0, n_topics=4, seed=2, **SMALL)
        result = generate(config, tmp_path)
        fraction, _ = _same_topic_fraction(result)
        assert fraction == 1.0

    def test_h_default_mostly_same_topic(self, tmp_path):
        config = SynthConfig(seed=3, **SMALL)
        result = generate(config, tmp_path)
        fraction, _ = _same_topic_fraction(result)
        # 0.8 + 0.2/8 with sampling noise
        assert fraction > 0.7


class TestCategoryShaping:
    def test_recovery_at_small_scale(self, tmp_path):
        config = SynthConfig(seed=4, **SMALL)
        result = generate(config, tmp_path)
        truth = load_ground_truth(result.ground_truth_path)
        docs = load_corpus(result.corpus_path)
        graph = load_edges(result.edges_path, extra_nodes=[d.user_id for d in docs])
        assignments = classify_users(graph)
        hits = sum(
            1 for u, (_, intended) in truth.items() if assignments[u] is intended
        )
        assert hits / len(truth) >= 0.95

    def test_intended_shares_within_two_points(self, tmp_path):
        config = SynthConfig(seed=7, **SMALL)
        result = generate(config, tmp_path)
        truth = load_ground_truth(result.ground_truth_path)
        counts = {c: 0 for c in RatioCategory}
        for _, intended in truth.values():
            counts[intended] += 1
        n = len(truth)
        assert abs(counts[RatioCategory.INFORMATION_SEEKER] / n - 0.25) <= 0.02
        assert abs(counts[RatioCategory.FRIEND] / n - 0.35) <= 0.02
        assert abs(counts[RatioCategory.FRIEND_HUB] / n - 0.20) <= 0.02
        assert abs(counts[RatioCategory.INFORMATION_SOURCE] / n - 0.15) <= 0.02

    def test_few_dropped_stubs(self, tmp_path):
        result = generate(SynthConfig(seed=8, **SMALL), tmp_path)
        total_stubs = result.n_edges + result.dropped_out_stubs
        assert result.dropped_out_stubs <= 0.02 * total_stubs


class TestValidation:
    def test_everyone_source_is_infeasible(self, tmp_path):
        config = SynthConfig(
            share_seeker=0.0,
            share_friend=0.0,
            share_hub=0.0,
            share_source=1.0,
            **SMALL,
        )
        with pytest.raises(InfeasibleSharesError):
            generate(config, tmp_path)

    def test_bad_shares_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            generate(SynthConfig(share_seeker=0.9, share_friend=0.9, **SMALL), tmp_path)

    def test_bad_homophily_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            generate(SynthConfig(homophily=1.5, **SMALL), tmp_path)

    def test_tiny_user_count_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            generate(SynthConfig(n_users=10), tmp_path)


class TestArtifacts:
    def test_edges_resolve_to_corpus(self, tmp_path):
        result = generate(SynthConfig(seed=9, **SMALL), tmp_path)
        docs = load_corpus(result.corpus_path)
        ids = {d.user_id for d in docs}
        graph = load_edges(result.edges_path)
        assert graph.nodes <= ids

    def test_ground_truth_covers_all_users(self, tmp_path):
        result = generate(SynthConfig(seed=10, **SMALL), tmp_path)
        truth = load_ground_truth(result.ground_truth_path)
        docs = load_corpus(result.corpus_path)
        assert set(truth) == {d.user_id for d in docs}

    def test_posts_have_expected_shape(self, tmp_path):
        config = SynthConfig(seed=11, **SMALL)
        result = generate(config, tmp_path)
        docs = load_corpus(result.corpus_path)
        assert all(len(d.texts) == config.posts_per_user for d in docs)
        words = docs[0].texts[0].split()
        assert len(words) == config.words_per_post
