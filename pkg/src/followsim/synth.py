"""Synthetic corpora and follow graphs with planted structure.

Each user gets one dominant topic; post words come from a per-topic
multinomial putting 80% of its mass on the topic's own vocabulary
block and 20% on a shared background block.  Follow edges are built by
matching out-stubs (followees wanted) to in-stubs (followers wanted):
for each out-stub of user u, with probability ``homophily`` the
followee is drawn uniformly from remaining in-stubs of u's own topic,
otherwise uniformly from all remaining in-stubs.  Self-loops and
duplicate edges are rejected; a stub that cannot be matched after a
bounded number of draws is dropped.

Ratio categories are planted through per-category degree targets with
enough margin that a few dropped stubs cannot move a user out of its
intended band:

==============  ========  ========  ============================
category        followees  followers  target ratio (g+1)/(f+1)
==============  ========  ========  ============================
seeker (A)          20         7      2.625   (band: >= 2.0)
friend (B)          35        31      1.125   (band: [1.0, 1.25])
hub (C)             31        35      0.889   (band: [0.8, 1.0))
source (D)           6        28      0.241   (band: <= 0.5)
unclassified        15        23      0.667   (gap: (0.5, 0.8))
==============  ========  ========  ============================

Out- and in-stub totals must balance; the slack is absorbed by users
in the wide bands (seeker, source, unclassified) within per-category
caps that keep every user inside its band.  Shares that cannot be
balanced this way raise InfeasibleSharesError.

Generation is single-threaded and byte-deterministic for a fixed
config.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InfeasibleSharesError
from .graph import RatioCategory
from .ingest import UserDocument, write_corpus, write_edges

BACKGROUND_MASS = 0.2

# (base followees, base followers) per intended category
_DEGREE_BASES = {
    RatioCategory.INFORMATION_SEEKER: (20, 7),
    RatioCategory.FRIEND: (35, 31),
    RatioCategory.FRIEND_HUB: (31, 35),
    RatioCategory.INFORMATION_SOURCE: (6, 28),
    RatioCategory.UNCLASSIFIED: (15, 23),
}

# categories whose bands are wide enough to absorb stub imbalance,
# with (max extra followers, max extra followees) staying in-band
_ABSORB_ORDER = (
    RatioCategory.INFORMATION_SOURCE,
    RatioCategory.INFORMATION_SEEKER,
    RatioCategory.UNCLASSIFIED,
)
_MAX_EXTRA_FOLLOWERS = {
    RatioCategory.INFORMATION_SOURCE: 17,  # f <= 45: ratio 7/46 = 0.152
    RatioCategory.INFORMATION_SEEKER: 2,  # f <= 9: ratio 21/10 = 2.1
    RatioCategory.UNCLASSIFIED: 6,  # f <= 29: ratio 16/30 = 0.533
}
_MAX_EXTRA_FOLLOWEES = {
    RatioCategory.INFORMATION_SOURCE: 5,  # g <= 11: ratio 12/29 = 0.414
    RatioCategory.INFORMATION_SEEKER: 20,  # ratio only grows past 2.0
    RatioCategory.UNCLASSIFIED: 2,  # g <= 17: ratio 18/24 = 0.75
}

_MATCH_ATTEMPTS = 200


@dataclass
class SynthConfig:
    """Knobs for the generator; defaults give a desk-scale dataset."""

    n_users: int = 2000
    n_topics: int = 8
    vocab_per_topic: int = 150
    posts_per_user: int = 20
    words_per_post: int = 12
    homophily: float = 0.8
    share_seeker: float = 0.25
    share_friend: float = 0.35
    share_hub: float = 0.20
    share_source: float = 0.15
    seed: int = 42

    def validate(self) -> None:
        if self.n_users < 100:
            raise ValueError("n_users must be at least 100")
        if self.n_topics < 1:
            raise ValueError("n_topics must be positive")
        for name in ("vocab_per_topic", "posts_per_user", "words_per_post"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.homophily <= 1.0:
            raise ValueError("homophily must lie in [0, 1]")
        shares = self.shares()
        if any(s < 0 for s in shares.values()):
            raise ValueError("category shares must be nonnegative")
        if sum(shares.values()) > 1.0 + 1e-9:
            raise ValueError("category shares must sum to at most 1")

    def shares(self) -> dict[RatioCategory, float]:
        return {
            RatioCategory.INFORMATION_SEEKER: self.share_seeker,
            RatioCategory.FRIEND: self.share_friend,
            RatioCategory.FRIEND_HUB: self.share_hub,
            RatioCategory.INFORMATION_SOURCE: self.share_source,
        }


@dataclass
class SynthResult:
    corpus_path: Path
    edges_path: Path
    ground_truth_path: Path
    n_users: int
    n_edges: int
    intended_counts: dict[RatioCategory, int]
    dropped_out_stubs: int
    unmatched_in_stubs: int


def _assign_categories(config: SynthConfig, rng) -> list[RatioCategory]:
    counts = {
        cat: int(share * config.n_users) for cat, share in config.shares().items()
    }
    labels: list[RatioCategory] = []
    for cat, count in counts.items():
        labels.extend([cat] * count)
    labels.extend(
        [RatioCategory.UNCLASSIFIED] * (config.n_users - len(labels))
    )
    order = rng.permutation(config.n_users)
    assigned = [RatioCategory.UNCLASSIFIED] * config.n_users
    for slot, user in enumerate(order):
        assigned[user] = labels[slot]
    return assigned


def _balanced_degree_targets(
    categories: list[RatioCategory],
) -> tuple[np.ndarray, np.ndarray]:
    """Per-user (followee, follower) targets with balanced stub totals."""
    n = len(categories)
    followees = np.array([_DEGREE_BASES[c][0] for c in categories], dtype=np.int64)
    followers = np.array([_DEGREE_BASES[c][1] for c in categories], dtype=np.int64)
    delta = int(followees.sum() - followers.sum())

    if delta > 0:  # more out-stubs than in-stubs: raise follower targets
        budget, caps = _MAX_EXTRA_FOLLOWERS, followers
    else:
        budget, caps = _MAX_EXTRA_FOLLOWEES, followees
    remaining = abs(delta)
    extras = {cat: budget[cat] for cat in _ABSORB_ORDER}
    absorbers = [
        (i, categories[i]) for i in range(n) if categories[i] in extras
    ]
    for _ in range(max(extras.values(), default=0)):
        if remaining == 0:
            break
        for i, cat in absorbers:
            if remaining == 0:
                break
            if extras[cat] == 0:
                continue
            caps[i] += 1
            remaining -= 1
        for cat in extras:
            if extras[cat] > 0:
                extras[cat] -= 1

    total = int(followees.sum() + followers.sum())
    if remaining > max(1, int(0.02 * total)):
        raise InfeasibleSharesError(
            f"category shares are infeasible: {remaining} of {total} stubs "
            "cannot be balanced (sinks need sources); adjust the shares"
        )
    return followees, followers


class _InStubPool:
    """In-stubs with O(1) uniform draw, swap-remove, and topic counts."""

    def __init__(self, followers: np.ndarray, topics: np.ndarray):
        self.users = [
            int(u) for u in np.repeat(np.arange(followers.size), followers)
        ]
        self.topic_of = topics
        self.per_topic = np.bincount(
            topics[np.array(self.users, dtype=np.int64)]
            if self.users
            else np.empty(0, dtype=np.int64),
            minlength=int(topics.max()) + 1 if topics.size else 1,
        )

    def __len__(self) -> int:
        return len(self.users)

    def peek(self, position: int) -> int:
        return self.users[position]

    def remove(self, position: int) -> None:
        user = self.users[position]
        self.per_topic[self.topic_of[user]] -= 1
        last = self.users.pop()
        if position < len(self.users):
            self.users[position] = last

    def topic_available(self, topic: int) -> bool:
        return self.per_topic[topic] > 0


def _match_edges(
    config: SynthConfig,
    topics: np.ndarray,
    followees: np.ndarray,
    followers: np.ndarray,
    rng,
) -> tuple[set[tuple[int, int]], int, int]:
    """Stub matching with topic-homophilous followee choice."""
    out_stubs = np.repeat(np.arange(config.n_users), followees)
    rng.shuffle(out_stubs)
    pool = _InStubPool(followers, topics)
    edges: set[tuple[int, int]] = set()
    dropped = 0
    for u in out_stubs:
        u = int(u)
        same_topic = bool(rng.random() < config.homophily)
        if same_topic and not pool.topic_available(topics[u]):
            dropped += 1
            continue
        matched = False
        for _ in range(_MATCH_ATTEMPTS):
            if len(pool) == 0:
                break
            position = int(rng.integers(0, len(pool)))
            v = pool.peek(position)
            if same_topic and topics[v] != topics[u]:
                continue
            if v == u or (u, v) in edges:
                continue
            pool.remove(position)
            edges.add((u, v))
            matched = True
            break
        if not matched:
            dropped += 1
    return edges, dropped, len(pool)


def _topic_words(config: SynthConfig) -> tuple[list[list[str]], list[str]]:
    topic_blocks = [
        [f"t{t:02d}w{j:03d}" for j in range(config.vocab_per_topic)]
        for t in range(config.n_topics)
    ]
    background = [f"bgw{j:03d}" for j in range(config.vocab_per_topic)]
    return topic_blocks, background


def _user_documents(
    config: SynthConfig, user_ids: list[str], topics: np.ndarray, rng
) -> list[UserDocument]:
    topic_blocks, background = _topic_words(config)
    docs = []
    words_total = config.posts_per_user * config.words_per_post
    for i, user_id in enumerate(user_ids):
        block = topic_blocks[topics[i]]
        from_background = rng.random(words_total) < BACKGROUND_MASS
        word_idx = rng.integers(0, config.vocab_per_topic, size=words_total)
        words = [
            background[w] if bg else block[w]
            for bg, w in zip(from_background, word_idx)
        ]
        texts = [
            " ".join(words[p * config.words_per_post : (p + 1) * config.words_per_post])
            for p in range(config.posts_per_user)
        ]
        docs.append(UserDocument(user_id=user_id, texts=texts))
    return docs


def generate(config: SynthConfig, out_dir: str | Path) -> SynthResult:
    """Write corpus, edges, and ground-truth files for the config."""
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)

    width = max(4, len(str(config.n_users - 1)))
    user_ids = [f"u{i:0{width}d}" for i in range(config.n_users)]
    topics = rng.integers(0, config.n_topics, size=config.n_users)
    categories = _assign_categories(config, rng)
    followees, followers = _balanced_degree_targets(categories)
    edges, dropped, leftover = _match_edges(
        config, topics, followees, followers, rng
    )
    docs = _user_documents(config, user_ids, topics, rng)

    corpus_path = out_dir / "corpus.jsonl"
    edges_path = out_dir / "edges.tsv"
    truth_path = out_dir / "ground_truth.tsv"
    write_corpus(docs, corpus_path)
    write_edges(
        sorted((user_ids[u], user_ids[v]) for u, v in edges), edges_path
    )
    with truth_path.open("w", encoding="utf-8", newline="\n") as fh:
        for i, user_id in enumerate(user_ids):
            fh.write(f"{user_id}\t{int(topics[i])}\t{categories[i].value}\n")

    intended: dict[RatioCategory, int] = {}
    for cat in categories:
        intended[cat] = intended.get(cat, 0) + 1
    return SynthResult(
        corpus_path=corpus_path,
        edges_path=edges_path,
        ground_truth_path=truth_path,
        n_users=config.n_users,
        n_edges=len(edges),
        intended_counts=intended,
        dropped_out_stubs=dropped,
        unmatched_in_stubs=leftover,
    )


def load_ground_truth(path: str | Path) -> dict[str, tuple[int, RatioCategory]]:
    """Read back ``user_id<TAB>topic<TAB>category`` rows."""
    truth: dict[str, tuple[int, RatioCategory]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            row = line.rstrip("\n\r")
            if not row:
                continue
            user_id, topic, category = row.split("\t")
            truth[user_id] = (int(topic), RatioCategory(category))
    return truth
