"""Tokenization, per-user word counting, and vocabulary selection.

Tokenizer rules (fixed so that results are reproducible without any
external tokenizer dependency):

1. Split the text on Unicode whitespace.
2. A piece containing a URL (``http://``, ``https://``, or ``www.``)
   collapses to the sentinel token ``<url>``.
3. A piece starting with ``@`` followed by a word character collapses to
   the sentinel token ``<mention>``.
4. Otherwise leading and trailing punctuation (Unicode category P*) is
   stripped; pieces that are empty after stripping are dropped.
5. Surviving tokens are lowercased.

The vocabulary is the ``v_max`` most frequent words by total count over
the supplied users, ties broken by ascending lexicographic order.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .ingest import UserDocument

URL_TOKEN = "<url>"
MENTION_TOKEN = "<mention>"

_URL_RE = re.compile(r"(?:https?://|www\.)", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w")


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Split ``text`` into normalized word tokens.

    Deterministic for equal inputs; the empty string yields an empty list.
    """
    tokens = []
    for piece in text.split():
        if _URL_RE.search(piece):
            tokens.append(URL_TOKEN)
            continue
        if _MENTION_RE.match(piece):
            tokens.append(MENTION_TOKEN)
            continue
        start = 0
        end = len(piece)
        while start < end and _is_punctuation(piece[start]):
            start += 1
        while end > start and _is_punctuation(piece[end - 1]):
            end -= 1
        if start == end:
            continue
        tokens.append(piece[start:end].lower())
    return tokens


@dataclass
class TokenCounts:
    """Word occurrence counts for one user.

    ``counts`` maps each word appearing in the user's texts to its
    occurrence count, aggregated over all posts.  ``total_in_vocab`` is
    the number of vocabulary-word occurrences; it is only meaningful
    after restriction against a fixed vocabulary.
    """

    user_id: str
    counts: dict[str, int]
    total_in_vocab: int | None = None


def count_words(doc: UserDocument) -> TokenCounts:
    """Count token occurrences over all of one user's posts."""
    counter: Counter[str] = Counter()
    for text in doc.texts:
        counter.update(tokenize(text))
    return TokenCounts(user_id=doc.user_id, counts=dict(counter))


@dataclass
class Vocabulary:
    """Ranked word list with global counts.

    ``words`` is ordered by descending global count (ties ascending
    lexicographic); ``counts`` holds the per-word global count over the
    users the vocabulary was built from; ``total`` is the grand total of
    vocabulary-word occurrences (the D in the conditioning of word
    probabilities).
    """

    words: tuple[str, ...]
    counts: dict[str, int]
    total: int
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


def build_vocabulary(
    counts: Iterable[TokenCounts] | Iterable[Mapping[str, int]],
    v_max: int = 10_000,
) -> Vocabulary:
    """Select the ``v_max`` most frequent words over the given users.

    The result does not depend on the iteration order of ``counts``.
    If fewer than ``v_max`` distinct words exist, all are kept.
    """
    if v_max < 1:
        raise ValueError(f"v_max must be >= 1, got {v_max}")
    totals: Counter[str] = Counter()
    for tc in counts:
        mapping = tc.counts if isinstance(tc, TokenCounts) else tc
        totals.update(mapping)
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:v_max]
    words = tuple(w for w, _ in ranked)
    selected = {w: c for w, c in ranked}
    return Vocabulary(words=words, counts=selected, total=sum(selected.values()))


def restrict_counts(tc: TokenCounts, vocab: Vocabulary) -> TokenCounts:
    """Restrict a user's counts to the vocabulary and fill in the total."""
    kept = {w: c for w, c in tc.counts.items() if w in vocab}
    return TokenCounts(
        user_id=tc.user_id, counts=kept, total_in_vocab=sum(kept.values())
    )


def count_corpus(docs: Sequence[UserDocument]) -> list[TokenCounts]:
    """Count words for every document; output order follows input order."""
    return [count_words(doc) for doc in docs]
