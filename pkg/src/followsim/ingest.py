"""On-disk formats: corpora, edges, vocabularies, vectors, model artifacts.

Corpus files are line-delimited JSON records, one user per line::

    {"user_id": "u1", "texts": ["first post", "second post"]}

Edge files are two-column TSV, one directed edge per row, the follower
first::

    u1<TAB>u2

Model artifacts are a binary container that round-trips bit-exactly:

======  =======================================================
offset  content
======  =======================================================
0       8-byte magic ``FSIMEMB\\x00``
8       1-byte format version (currently 1)
9       header ``<QQQd``: n_users, n_vocab, n_dims, shift k
..      n_users user ids, each ``<I`` byte length + UTF-8 bytes
..      n_vocab entries: word (``<I`` length + UTF-8) + ``<Q`` count
..      sigma: n_dims little-endian float64
..      U: n_users * n_dims float64, row-major
..      W: n_vocab * n_dims float64, row-major
end-4   ``<I`` CRC32 of every byte after the version byte
======  =======================================================

All integers and floats are little-endian.  A version byte other than
the current one raises :class:`~followsim.errors.ModelVersionError`;
truncation, trailing bytes, or a checksum mismatch raise
:class:`~followsim.errors.ModelIntegrityError`.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateUserError,
    FormatError,
    ModelIntegrityError,
    ModelVersionError,
    SelfLoopError,
)
from .graph import FollowGraph

if TYPE_CHECKING:
    from .corpus import Vocabulary
    from .embedding import EmbeddingModel, UserVector

MODEL_MAGIC = b"FSIMEMB\x00"
MODEL_VERSION = 1


@dataclass
class UserDocument:
    """One user's corpus: identity plus the ordered list of post texts."""

    user_id: str
    texts: list[str]


@dataclass
class DatasetManifest:
    """Summary of a dataset's files, checked sizes, and content hashes.

    ``graph_only_users`` lists edge-file users that have no corpus
    record; any other unknown user in the edge file is a validation
    error.  ``degree_overrides_path`` optionally points to a TSV of
    externally known (followees, followers) totals used in preference
    to degrees induced by the loaded edge set.
    """

    corpus_path: str
    edges_path: str
    n_users: int
    n_edges: int
    n_posts: int
    max_posts_per_user: int
    corpus_sha256: str
    edges_sha256: str
    graph_only_users: list[str] = field(default_factory=list)
    degree_overrides_path: str | None = None


# ---------------------------------------------------------------------------
# corpus files


def load_corpus(path: str | Path) -> list[UserDocument]:
    """Parse a line-delimited corpus file, preserving record order."""
    path = Path(path)
    docs: list[UserDocument] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(
                    f"invalid JSON record: {exc.msg}", path=path, line=lineno
                ) from exc
            if not isinstance(record, dict):
                raise FormatError("record is not an object", path=path, line=lineno)
            user_id = record.get("user_id")
            texts = record.get("texts")
            if not isinstance(user_id, str) or not user_id:
                raise FormatError(
                    "missing or empty user_id", path=path, line=lineno
                )
            if not isinstance(texts, list) or any(
                not isinstance(t, str) for t in texts
            ):
                raise FormatError(
                    "texts must be a list of strings", path=path, line=lineno
                )
            if user_id in seen:
                raise DuplicateUserError(
                    f"duplicate user_id {user_id!r}", path=path, line=lineno
                )
            seen.add(user_id)
            docs.append(UserDocument(user_id=user_id, texts=list(texts)))
    return docs


def write_corpus(docs: Iterable[UserDocument], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {"user_id": doc.user_id, "texts": doc.texts},
                    ensure_ascii=False,
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
            fh.write("\n")


# ---------------------------------------------------------------------------
# edge files


def load_edges(path: str | Path, extra_nodes: Iterable[str] = ()) -> FollowGraph:
    """Parse a TSV edge file into a deduplicated directed graph."""
    path = Path(path)
    edges: list[tuple[str, str]] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            row = line.rstrip("\n\r")
            if not row:
                continue
            fields = row.split("\t")
            if len(fields) != 2:
                raise FormatError(
                    f"expected 2 tab-separated fields, got {len(fields)}",
                    path=path,
                    line=lineno,
                )
            source, target = fields
            if not source or not target:
                raise FormatError("empty user id", path=path, line=lineno)
            if source == target:
                raise SelfLoopError(
                    f"self-loop on user {source!r}", path=path, line=lineno
                )
            edges.append((source, target))
    return FollowGraph(edges, nodes=extra_nodes)


def write_edges(edges: Iterable[tuple[str, str]], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for source, target in edges:
            fh.write(f"{source}\t{target}\n")


def load_degree_overrides(path: str | Path) -> dict[str, tuple[int, int]]:
    """Parse a TSV of ``user_id<TAB>followees<TAB>followers`` totals."""
    path = Path(path)
    overrides: dict[str, tuple[int, int]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            row = line.rstrip("\n\r")
            if not row:
                continue
            fields = row.split("\t")
            if len(fields) != 3:
                raise FormatError(
                    f"expected 3 tab-separated fields, got {len(fields)}",
                    path=path,
                    line=lineno,
                )
            user, followees, followers = fields
            try:
                overrides[user] = (int(followees), int(followers))
            except ValueError as exc:
                raise FormatError(
                    "degree counts must be integers", path=path, line=lineno
                ) from exc
    return overrides


# ---------------------------------------------------------------------------
# manifests


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    corpus_path: str | Path,
    edges_path: str | Path,
    degree_overrides_path: str | Path | None = None,
) -> DatasetManifest:
    """Load both files, validate cross references, and summarize them.

    Edge-file users without a corpus record are recorded as graph-only
    users rather than rejected; no per-user post cap is applied.
    """
    corpus_path = Path(corpus_path)
    edges_path = Path(edges_path)
    docs = load_corpus(corpus_path)
    graph = load_edges(edges_path)
    corpus_ids = {doc.user_id for doc in docs}
    graph_only = sorted(graph.nodes - corpus_ids)
    post_counts = [len(doc.texts) for doc in docs]
    return DatasetManifest(
        corpus_path=str(corpus_path),
        edges_path=str(edges_path),
        n_users=len(docs),
        n_edges=graph.n_edges,
        n_posts=sum(post_counts),
        max_posts_per_user=max(post_counts, default=0),
        corpus_sha256=_sha256(corpus_path),
        edges_sha256=_sha256(edges_path),
        graph_only_users=graph_only,
        degree_overrides_path=(
            str(degree_overrides_path) if degree_overrides_path else None
        ),
    )


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(vars(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    with Path(path).open("r", encoding="utf-8") as fh:
        return DatasetManifest(**json.load(fh))


# ---------------------------------------------------------------------------
# vocabulary files


def write_vocabulary(vocab: "Vocabulary", path: str | Path) -> None:
    """Emit ``rank<TAB>word<TAB>count`` rows, rank starting at 1."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rank, word in enumerate(vocab.words, start=1):
            fh.write(f"{rank}\t{word}\t{vocab.counts[word]}\n")


def load_vocabulary(path: str | Path) -> "Vocabulary":
    from .corpus import Vocabulary

    path = Path(path)
    words: list[str] = []
    counts: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            row = line.rstrip("\n\r")
            if not row:
                continue
            fields = row.split("\t")
            if len(fields) != 3:
                raise FormatError(
                    f"expected 3 tab-separated fields, got {len(fields)}",
                    path=path,
                    line=lineno,
                )
            rank_s, word, count_s = fields
            try:
                rank = int(rank_s)
                count = int(count_s)
            except ValueError as exc:
                raise FormatError(
                    "rank and count must be integers", path=path, line=lineno
                ) from exc
            if rank != len(words) + 1:
                raise FormatError(
                    f"rank {rank} out of order", path=path, line=lineno
                )
            words.append(word)
            counts[word] = count
    return Vocabulary(words=tuple(words), counts=counts, total=sum(counts.values()))


# ---------------------------------------------------------------------------
# vector files


def write_vectors(vectors: Iterable["UserVector"], path: str | Path) -> None:
    """Emit ``user_id<TAB>v1<TAB>...<TAB>vn`` rows.

    Floats are written with 17 significant digits so they round-trip
    to the same float64 bit pattern.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for vec in vectors:
            values = "\t".join(format(v, ".17g") for v in vec.values)
            fh.write(f"{vec.user_id}\t{values}\n")


def load_vectors(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    width = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            row = line.rstrip("\n\r")
            if not row:
                continue
            fields = row.split("\t")
            if len(fields) < 2:
                raise FormatError(
                    "expected user_id and at least one value", path=path, line=lineno
                )
            user_id = fields[0]
            try:
                values = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(
                    "vector entries must be floats", path=path, line=lineno
                ) from exc
            if width is None:
                width = values.size
            elif values.size != width:
                raise FormatError(
                    f"inconsistent vector length {values.size} != {width}",
                    path=path,
                    line=lineno,
                )
            if user_id in vectors:
                raise DuplicateUserError(
                    f"duplicate user_id {user_id!r}", path=path, line=lineno
                )
            vectors[user_id] = values
    return vectors


# ---------------------------------------------------------------------------
# category files


def write_categories(
    ratios: Mapping[str, float],
    assignments: Mapping[str, "object"],
    path: str | Path,
) -> None:
    """Emit ``user_id<TAB>ratio<TAB>category`` rows in sorted user order."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for user in sorted(ratios):
            category = assignments[user]
            label = getattr(category, "value", category)
            fh.write(f"{user}\t{format(ratios[user], '.17g')}\t{label}\n")


# ---------------------------------------------------------------------------
# model artifacts


class _CrcWriter:
    def __init__(self, fh):
        self._fh = fh
        self.crc = 0

    def write(self, data: bytes) -> None:
        self._fh.write(data)
        self.crc = zlib.crc32(data, self.crc)


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_model(model: "EmbeddingModel", path: str | Path) -> None:
    """Serialize a model to the documented binary container."""
    path = Path(path)
    u = np.ascontiguousarray(model.u, dtype="<f8")
    w = np.ascontiguousarray(model.w, dtype="<f8")
    sigma = np.ascontiguousarray(model.sigma, dtype="<f8")
    with path.open("wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<B", MODEL_VERSION))
        out = _CrcWriter(fh)
        out.write(
            struct.pack(
                "<QQQd", len(model.user_ids), len(model.vocab), model.n, model.k
            )
        )
        for user in model.user_ids:
            out.write(_pack_str(user))
        for word in model.vocab.words:
            out.write(_pack_str(word))
            out.write(struct.pack("<Q", model.vocab.counts[word]))
        out.write(sigma.tobytes())
        out.write(u.tobytes())
        out.write(w.tobytes())
        fh.write(struct.pack("<I", out.crc))


class _Reader:
    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.offset = offset

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise ModelIntegrityError(
                f"model file truncated: wanted {end} bytes, have {len(self.data)}"
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def take_str(self) -> str:
        (length,) = self.unpack("<I")
        return self.take(length).decode("utf-8")


def load_model(path: str | Path) -> "EmbeddingModel":
    """Read a model artifact back, bit-exactly."""
    from .corpus import Vocabulary
    from .embedding import EmbeddingModel

    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(MODEL_MAGIC) + 1 + 4:
        raise ModelIntegrityError(f"{path}: file too short to be a model artifact")
    if data[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelIntegrityError(f"{path}: bad magic, not a model artifact")
    version = data[len(MODEL_MAGIC)]
    if version != MODEL_VERSION:
        raise ModelVersionError(
            f"{path}: model format version {version} is not supported "
            f"(current version is {MODEL_VERSION})"
        )
    (stored_crc,) = struct.unpack("<I", data[-4:])
    payload = data[len(MODEL_MAGIC) + 1 : -4]
    if zlib.crc32(payload) != stored_crc:
        raise ModelIntegrityError(f"{path}: checksum mismatch, file is corrupt")

    reader = _Reader(data, len(MODEL_MAGIC) + 1)
    n_users, n_vocab, n_dims, k = reader.unpack("<QQQd")
    user_ids = tuple(reader.take_str() for _ in range(n_users))
    words = []
    counts = {}
    for _ in range(n_vocab):
        word = reader.take_str()
        (count,) = reader.unpack("<Q")
        words.append(word)
        counts[word] = count
    sigma = np.frombuffer(reader.take(8 * n_dims), dtype="<f8").copy()
    u = (
        np.frombuffer(reader.take(8 * n_users * n_dims), dtype="<f8")
        .reshape(n_users, n_dims)
        .copy()
    )
    w = (
        np.frombuffer(reader.take(8 * n_vocab * n_dims), dtype="<f8")
        .reshape(n_vocab, n_dims)
        .copy()
    )
    if reader.offset != len(data) - 4:
        raise ModelIntegrityError(
            f"{path}: {len(data) - 4 - reader.offset} unexpected trailing bytes"
        )
    vocab = Vocabulary(words=tuple(words), counts=counts, total=sum(counts.values()))
    return EmbeddingModel(user_ids=user_ids, vocab=vocab, u=u, w=w, sigma=sigma, k=k)
