"""Directed follow graph, follower-followee ratios, and ratio categories.

A user's ratio is ``(followees + 1) / (followers + 1)``; the +1 on both
sides avoids division by zero and pins users with equal counts to
exactly 1.  Categories partition the ratio axis:

=====================  ==========================
Information Seeker (A)  ratio >= 2.0
Friend (B)              1.0 <= ratio <= 1.25
Friend Hub (C)          0.8 <= ratio < 1.0
Information Source (D)  ratio <= 0.5
Unclassified            (0.5, 0.8) and (1.25, 2.0)
=====================  ==========================

A ratio of exactly 1.0 belongs to Friend; all other band ends are
inclusive on the category side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import MissingAssignmentError


class RatioCategory(Enum):
    INFORMATION_SEEKER = "information_seeker"
    FRIEND = "friend"
    FRIEND_HUB = "friend_hub"
    INFORMATION_SOURCE = "information_source"
    UNCLASSIFIED = "unclassified"

    @property
    def letter(self) -> str:
        return _LETTERS[self]

    @property
    def display_name(self) -> str:
        return self.value.replace("_", " ").title()


_LETTERS = {
    RatioCategory.INFORMATION_SEEKER: "A",
    RatioCategory.FRIEND: "B",
    RatioCategory.FRIEND_HUB: "C",
    RatioCategory.INFORMATION_SOURCE: "D",
    RatioCategory.UNCLASSIFIED: "-",
}

# Four classified categories in canonical report order.
CATEGORIES = (
    RatioCategory.INFORMATION_SEEKER,
    RatioCategory.FRIEND,
    RatioCategory.FRIEND_HUB,
    RatioCategory.INFORMATION_SOURCE,
)


def follow_ratio(n_followee: int, n_follower: int) -> float:
    """Smoothed followee/follower ratio, always positive and finite."""
    if n_followee < 0 or n_follower < 0:
        raise ValueError("degree counts must be nonnegative")
    return (n_followee + 1) / (n_follower + 1)


def classify(ratio: float) -> RatioCategory:
    """Map a positive ratio to its category."""
    if not ratio > 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    if ratio >= 2.0:
        return RatioCategory.INFORMATION_SEEKER
    if 1.0 <= ratio <= 1.25:
        return RatioCategory.FRIEND
    if 0.8 <= ratio < 1.0:
        return RatioCategory.FRIEND_HUB
    if ratio <= 0.5:
        return RatioCategory.INFORMATION_SOURCE
    return RatioCategory.UNCLASSIFIED


class FollowGraph:
    """Immutable directed graph over user ids.

    Self-loops and duplicate edges are rejected at construction, so
    degree counts always agree with the edge set.  ``out_degree`` of a
    user is their followee count, ``in_degree`` their follower count.
    """

    def __init__(self, edges: Iterable[tuple[str, str]], nodes: Iterable[str] = ()):
        out_edges: dict[str, set[str]] = {}
        in_degree: dict[str, int] = {}
        all_nodes: set[str] = set(nodes)
        n_edges = 0
        for source, target in edges:
            if source == target:
                raise ValueError(f"self-loop on user {source!r}")
            targets = out_edges.setdefault(source, set())
            if target in targets:
                continue
            targets.add(target)
            in_degree[target] = in_degree.get(target, 0) + 1
            n_edges += 1
            all_nodes.add(source)
            all_nodes.add(target)
        self._out_edges = out_edges
        self._in_degree = in_degree
        self._nodes = frozenset(all_nodes)
        self._n_edges = n_edges

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def edges(self) -> Iterable[tuple[str, str]]:
        """Yield (follower, followee) pairs in deterministic sorted order."""
        for source in sorted(self._out_edges):
            for target in sorted(self._out_edges[source]):
                yield source, target

    def has_edge(self, source: str, target: str) -> bool:
        return target in self._out_edges.get(source, ())

    def out_degree(self, user: str) -> int:
        return len(self._out_edges.get(user, ()))

    def in_degree(self, user: str) -> int:
        return self._in_degree.get(user, 0)

    def followees(self, user: str) -> frozenset[str]:
        return frozenset(self._out_edges.get(user, ()))


def follow_ratios(
    graph: FollowGraph,
    degree_overrides: Mapping[str, tuple[int, int]] | None = None,
) -> dict[str, float]:
    """Per-user ratio from graph degrees.

    ``degree_overrides`` maps user_id to externally known
    (followees, followers) totals; when present for a user they take
    precedence over the degrees induced by the loaded edge set.
    """
    ratios = {}
    for user in sorted(graph.nodes):
        if degree_overrides and user in degree_overrides:
            followees, followers = degree_overrides[user]
        else:
            followees, followers = graph.out_degree(user), graph.in_degree(user)
        ratios[user] = follow_ratio(followees, followers)
    return ratios


def classify_users(
    graph: FollowGraph,
    degree_overrides: Mapping[str, tuple[int, int]] | None = None,
) -> dict[str, RatioCategory]:
    """Classify every graph user by its follow ratio."""
    return {
        user: classify(ratio)
        for user, ratio in follow_ratios(graph, degree_overrides).items()
    }


@dataclass
class CategoryStats:
    count: int = 0
    mean_followees: float = 0.0
    mean_followers: float = 0.0


@dataclass
class CategorySummary:
    """Per-category user counts and mean degrees; unclassified kept apart."""

    stats: dict[RatioCategory, CategoryStats] = field(default_factory=dict)

    @property
    def classified_total(self) -> int:
        return sum(self.stats[c].count for c in CATEGORIES)


def summarize_categories(
    graph: FollowGraph, assignments: Mapping[str, RatioCategory]
) -> CategorySummary:
    """Count users and average degrees per category.

    Every graph user must appear in ``assignments``.
    """
    sums: dict[RatioCategory, list[int]] = {
        c: [0, 0, 0] for c in RatioCategory
    }  # count, followees, followers
    for user in graph.nodes:
        category = assignments.get(user)
        if category is None:
            raise MissingAssignmentError(user)
        acc = sums[category]
        acc[0] += 1
        acc[1] += graph.out_degree(user)
        acc[2] += graph.in_degree(user)
    summary = CategorySummary()
    for category, (count, followees, followers) in sums.items():
        summary.stats[category] = CategoryStats(
            count=count,
            mean_followees=followees / count if count else 0.0,
            mean_followers=followers / count if count else 0.0,
        )
    return summary
