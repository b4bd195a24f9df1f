"""Shifted positive PMI matrices, truncated factorization, projection.

For a user u and word w the matrix entry is::

    m[u, w] = max(log(#(u,w) * D / (#(u) * #(w))) - log(k), 0)

with #(u,w) the user's count of w, #(u) the user's total in-vocabulary
count, #(w) the word's global count, D the grand total, and k the
shift.  Entries that are zero are not stored.

The factorization keeps the top ``n`` singular triplets of the sparse
matrix via randomized subspace iteration: a seeded Gaussian sketch with
oversampling, power steps repeated until the Ritz singular value
estimates stall, then a Rayleigh-Ritz extraction.  The sign ambiguity
is fixed by making the largest-magnitude entry of each right singular
vector positive.  User vectors are the rows of ``U = A sqrt(S)``; the
word matrix is ``W = B sqrt(S)``.

Out-of-sample users are folded in by solving the normal equations
``u* = (W^T W)^-1 W^T m`` against their own SPPMI row; the Cholesky
factor of ``W^T W`` is computed once per model and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .corpus import TokenCounts, Vocabulary
from .errors import DegenerateModelError, VocabularyMismatchError


def split_sample(
    users: Iterable[str], sample_size: int, seed: int
) -> tuple[list[str], list[str]]:
    """Seeded random partition into sample and out-of-sample users.

    The partition depends only on the user set and the seed, not on the
    input order.  Both halves are returned sorted.
    """
    unique = sorted(set(users))
    if not 1 <= sample_size <= len(unique):
        raise ValueError(
            f"sample_size must be in [1, {len(unique)}], got {sample_size}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(unique))
    chosen = {unique[i] for i in perm[:sample_size]}
    sample = sorted(chosen)
    out = [u for u in unique if u not in chosen]
    return sample, out


@dataclass
class SppmiMatrix:
    """Sparse user-by-word SPPMI matrix.

    Rows follow ``user_ids`` order; users without in-vocabulary words
    keep an explicit all-zero row so indices stay aligned.
    """

    user_ids: tuple[str, ...]
    vocab: Vocabulary
    matrix: scipy.sparse.csr_matrix
    k: float


def _sppmi_row(
    counts: Mapping[str, int], vocab: Vocabulary, k: float
) -> tuple[np.ndarray, np.ndarray]:
    """Column indices and positive values of one user's SPPMI row."""
    in_vocab = [(vocab.index[w], c) for w, c in counts.items() if w in vocab]
    if not in_vocab:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    in_vocab.sort()
    idx = np.array([i for i, _ in in_vocab], dtype=np.int64)
    cnt = np.array([c for _, c in in_vocab], dtype=np.float64)
    total = cnt.sum()
    global_counts = np.array([vocab.counts[vocab.words[i]] for i in idx], dtype=np.float64)
    values = np.log(cnt * vocab.total / (total * global_counts)) - math.log(k)
    keep = values > 0.0
    return idx[keep], values[keep]


def build_sppmi(
    counts: Sequence[TokenCounts], vocab: Vocabulary, k: float = 1.0
) -> SppmiMatrix:
    """Assemble the SPPMI matrix over sample users in the given order."""
    if k <= 0:
        raise ValueError(f"shift k must be positive, got {k}")
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for tc in counts:
        idx, values = _sppmi_row(tc.counts, vocab, k)
        indices.append(idx)
        data.append(values)
        indptr.append(indptr[-1] + idx.size)
    matrix = scipy.sparse.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
            np.array(indptr, dtype=np.int64),
        ),
        shape=(len(counts), len(vocab)),
    )
    return SppmiMatrix(
        user_ids=tuple(tc.user_id for tc in counts),
        vocab=vocab,
        matrix=matrix,
        k=k,
    )


def _orthonormal(matrix: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(matrix)
    return q


def truncated_svd(
    matrix,
    n: int,
    seed: int,
    *,
    oversample: int = 10,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``n`` singular triplets ``(A, sigma, B)`` with ``M ~ A S B^T``.

    ``matrix`` may be dense or scipy-sparse.  Power steps repeat until
    the top-``n`` Ritz values change by no more than ``tol`` (relative
    to the leading value) on two consecutive iterations, or ``max_iter``
    is hit.  A run whose per-step improvement decays slower than a
    fixed ratio for several consecutive steps is in the asymptotic
    regime of a near-flat tail spectrum and is cut short; that path
    only triggers on large noisy inputs, far below the tolerance that
    small dense inputs reach.  Deterministic for a fixed seed.
    """
    rows, cols = matrix.shape
    limit = min(rows, cols)
    if not 1 <= n <= limit:
        raise ValueError(f"n must be in [1, {limit}], got {n}")
    if scipy.sparse.issparse(matrix):
        matrix = matrix.tocsr().astype(np.float64)
        matrix_t = matrix.T.tocsr()
    else:
        matrix = np.asarray(matrix, dtype=np.float64)
        matrix_t = matrix.T

    rng = np.random.default_rng(seed)
    sketch = min(n + oversample, limit)
    omega = rng.standard_normal((cols, sketch))
    q = _orthonormal(matrix @ omega)

    prev = None
    prev_change = None
    stalls = 0
    plateau = 0
    for iteration in range(max_iter):
        qz = _orthonormal(matrix_t @ q)
        y = matrix @ qz
        q, r = np.linalg.qr(y)
        ritz = np.linalg.svd(r, compute_uv=False)[:n]
        if prev is not None:
            scale = max(ritz[0], np.finfo(np.float64).tiny)
            change = float(np.max(np.abs(ritz - prev))) / scale
            if change <= tol:
                stalls += 1
                plateau = 0
                if stalls >= 2:
                    break
            else:
                stalls = 0
                if (
                    iteration >= 5
                    and prev_change is not None
                    and prev_change > 0
                    and change / prev_change > 0.8
                ):
                    plateau += 1
                    if plateau >= 4:
                        break
                else:
                    plateau = 0
            prev_change = change
        prev = ritz

    small = matrix_t @ q  # cols x sketch
    u_small, sigma, vt = np.linalg.svd(small.T, full_matrices=False)
    a = q @ u_small[:, :n]
    sigma = sigma[:n].copy()
    b = vt[:n].T.copy()

    # resolve the sign ambiguity on the right singular vectors
    lead = b[np.argmax(np.abs(b), axis=0), np.arange(n)]
    flip = lead < 0
    a[:, flip] *= -1.0
    b[:, flip] *= -1.0
    return a, sigma, b


@dataclass
class UserVector:
    """One user's embedding with its provenance."""

    user_id: str
    values: np.ndarray
    origin: Literal["sample", "projected"]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite vector for user {self.user_id!r}")


@dataclass(eq=False)
class EmbeddingModel:
    """Factorized embedding: sample rows ``u``, word matrix ``w``.

    ``sigma`` holds the retained singular values in non-increasing
    order; ``k`` is the SPPMI shift the matrix was built with.
    """

    user_ids: tuple[str, ...]
    vocab: Vocabulary
    u: np.ndarray
    w: np.ndarray
    sigma: np.ndarray
    k: float
    _row_of: dict[str, int] = field(init=False, repr=False)
    _cho: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self._row_of = {uid: i for i, uid in enumerate(self.user_ids)}

    @property
    def n(self) -> int:
        return int(self.sigma.size)

    def is_sample_user(self, user_id: str) -> bool:
        return user_id in self._row_of

    def user_vector(self, user_id: str) -> UserVector:
        return UserVector(
            user_id=user_id, values=self.u[self._row_of[user_id]], origin="sample"
        )

    def _solve_operator(self):
        """Cached Cholesky factor of ``W^T W`` for the fold-in solve."""
        if self._cho is None:
            deficient = np.nonzero(self.sigma <= 0.0)[0]
            if deficient.size:
                raise DegenerateModelError(int(deficient[0]))
            gram = self.w.T @ self.w
            try:
                self._cho = scipy.linalg.cho_factor(gram)
            except scipy.linalg.LinAlgError as exc:
                raise DegenerateModelError(int(np.argmin(self.sigma))) from exc
        return self._cho

    def solve_fold_in(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(W^T W) x = rhs`` for one or many right-hand sides."""
        return scipy.linalg.cho_solve(self._solve_operator(), rhs)


def factorize(m: SppmiMatrix, n: int, seed: int, **svd_options) -> EmbeddingModel:
    """Factorize an SPPMI matrix into an embedding model."""
    a, sigma, b = truncated_svd(m.matrix, n, seed, **svd_options)
    root = np.sqrt(sigma)
    return EmbeddingModel(
        user_ids=m.user_ids,
        vocab=m.vocab,
        u=a * root,
        w=b * root,
        sigma=sigma,
        k=m.k,
    )


def _check_vocab(vocab: Vocabulary, model: EmbeddingModel) -> None:
    if vocab is not model.vocab and vocab.words != model.vocab.words:
        raise VocabularyMismatchError(
            "vocabulary does not match the model's vocabulary"
        )


def project_out_of_sample(
    counts: TokenCounts, vocab: Vocabulary, model: EmbeddingModel
) -> UserVector:
    """Fold one out-of-sample user into the model's vector space."""
    _check_vocab(vocab, model)
    idx, values = _sppmi_row(counts.counts, vocab, model.k)
    if idx.size == 0:
        solution = np.zeros(model.n)
    else:
        rhs = model.w[idx].T @ values
        solution = model.solve_fold_in(rhs)
    return UserVector(user_id=counts.user_id, values=solution, origin="projected")


def project_many(
    counts: Sequence[TokenCounts], vocab: Vocabulary, model: EmbeddingModel
) -> list[UserVector]:
    """Fold in a batch of users with a single normal-equations solve."""
    _check_vocab(vocab, model)
    if not counts:
        return []
    rhs = np.zeros((model.n, len(counts)))
    for col, tc in enumerate(counts):
        idx, values = _sppmi_row(tc.counts, vocab, model.k)
        if idx.size:
            rhs[:, col] = model.w[idx].T @ values
    solutions = model.solve_fold_in(rhs)
    return [
        UserVector(user_id=tc.user_id, values=solutions[:, col], origin="projected")
        for col, tc in enumerate(counts)
    ]


def sample_vectors(model: EmbeddingModel) -> list[UserVector]:
    """The sample users' vectors, in model row order."""
    return [
        UserVector(user_id=uid, values=model.u[i], origin="sample")
        for i, uid in enumerate(model.user_ids)
    ]


def corpus_vectors(
    model: EmbeddingModel, counts: Sequence[TokenCounts]
) -> list[UserVector]:
    """Vectors for a whole corpus: sample rows as-is, the rest folded in."""
    out_of_sample = [tc for tc in counts if not model.is_sample_user(tc.user_id)]
    projected = {
        v.user_id: v for v in project_many(out_of_sample, model.vocab, model)
    }
    vectors = []
    for tc in counts:
        if model.is_sample_user(tc.user_id):
            vectors.append(model.user_vector(tc.user_id))
        else:
            vectors.append(projected[tc.user_id])
    return vectors


def _as_vector(v) -> np.ndarray:
    if isinstance(v, UserVector):
        return v.values
    return np.asarray(v, dtype=np.float64)


def cosine_flagged(a, b) -> tuple[float, bool]:
    """Cosine similarity plus a flag marking zero-norm degeneracy.

    Zero-norm pairs yield (0.0, True); callers exclude flagged pairs
    from aggregates and report their count.
    """
    va = _as_vector(a)
    vb = _as_vector(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    norm_a = math.sqrt(float(va @ va))
    norm_b = math.sqrt(float(vb @ vb))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0, True
    value = float(va @ vb) / (norm_a * norm_b)
    return min(1.0, max(-1.0, value)), False


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; 0.0 for zero-norm inputs."""
    return cosine_flagged(a, b)[0]
