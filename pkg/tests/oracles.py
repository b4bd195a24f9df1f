"""Independent reference implementations used to check the library.

These deliberately avoid the code paths they verify: the SVD oracle is
a classical one-sided Jacobi iteration, the SPPMI oracle evaluates the
formula over a dense count table, and the cross-tabulation oracles are
plain-Python enumeration with scalar arithmetic.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_singular_values(matrix, tol: float = 1e-14, max_sweeps: int = 60):
    """Singular values by cyclic one-sided Jacobi, descending order."""
    a = np.array(matrix, dtype=np.float64)
    if a.shape[0] < a.shape[1]:
        a = a.T.copy()
    _, n = a.shape
    for _ in range(max_sweeps):
        gram = a.T @ a  # refresh to avoid incremental drift
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = gram[p, p]
                beta = gram[q, q]
                gamma = gram[p, q]
                if alpha * beta == 0.0:
                    continue
                rel = abs(gamma) / math.sqrt(alpha * beta)
                if rel <= tol:
                    continue
                off = max(off, rel)
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (
                    abs(zeta) + math.sqrt(1.0 + zeta * zeta)
                )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
                row_p = gram[p, :].copy()
                row_q = gram[q, :].copy()
                gram[p, :] = c * row_p - s * row_q
                gram[q, :] = s * row_p + c * row_q
                col_p = gram[:, p].copy()
                col_q = gram[:, q].copy()
                gram[:, p] = c * col_p - s * col_q
                gram[:, q] = s * col_p + c * col_q
        if off <= tol:
            break
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def jacobi_rank_n_error(matrix, n: int) -> float:
    """Frobenius norm of the optimal rank-n residual, from the oracle."""
    values = jacobi_singular_values(matrix)
    tail = values[n:]
    return math.sqrt(float(np.sum(tail * tail)))


def dense_sppmi(count_rows, vocab_words, k: float) -> np.ndarray:
    """Direct dense evaluation of the shifted positive PMI formula.

    ``count_rows`` is a list of word->count mappings (one per user);
    counts outside ``vocab_words`` are ignored.  All statistics are
    taken from the dense restricted table itself.
    """
    table = np.zeros((len(count_rows), len(vocab_words)))
    for i, row in enumerate(count_rows):
        for j, word in enumerate(vocab_words):
            table[i, j] = row.get(word, 0)
    word_totals = table.sum(axis=0)
    user_totals = table.sum(axis=1)
    grand = table.sum()
    out = np.zeros_like(table)
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            if table[i, j] <= 0 or user_totals[i] <= 0 or word_totals[j] <= 0:
                continue
            pmi = math.log(
                table[i, j] * grand / (user_totals[i] * word_totals[j])
            ) - math.log(k)
            if pmi > 0:
                out[i, j] = pmi
    return out


def scalar_cosine(a, b):
    """Plain-Python cosine; returns (value, flagged)."""
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) * float(x) for x in a))
    nb = math.sqrt(sum(float(y) * float(y) for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0, True
    return max(-1.0, min(1.0, dot / (na * nb))), False


def brute_force_cross_counts(edges, assignments, order):
    """4x4 counts plus excluded count by plain enumeration."""
    position = {c: i for i, c in enumerate(order)}
    matrix = [[0] * 4 for _ in range(4)]
    excluded = 0
    for source, target in edges:
        ci = position.get(assignments[source], -1)
        cj = position.get(assignments[target], -1)
        if ci < 0 or cj < 0:
            excluded += 1
        else:
            matrix[ci][cj] += 1
    return matrix, excluded


def brute_force_cell_means(edges, assignments, vectors, order):
    """Per-cell mean cosine over edges, skipping flagged pairs.

    Returns (means, counts) as nested lists; cells without pairs hold
    None.
    """
    position = {c: i for i, c in enumerate(order)}
    sums = [[[] for _ in range(4)] for _ in range(4)]
    for source, target in edges:
        ci = position.get(assignments[source], -1)
        cj = position.get(assignments[target], -1)
        if ci < 0 or cj < 0:
            continue
        value, flagged = scalar_cosine(vectors[source], vectors[target])
        if not flagged:
            sums[ci][cj].append(value)
    means = [
        [math.fsum(cell) / len(cell) if cell else None for cell in row]
        for row in sums
    ]
    counts = [[len(cell) for cell in row] for row in sums]
    return means, counts
