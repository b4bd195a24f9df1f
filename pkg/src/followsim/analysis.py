"""Cross-category edge counts, similarity aggregates, and report files.

Edges are cross-tabulated by (follower category, followee category)
over the four classified categories; edges touching an unclassified
endpoint are excluded from the 4x4 tables but still counted.  Pair
similarity uses cosine over user vectors; zero-norm (flagged) pairs are
excluded from every mean and histogram and reported as counts.  All
means use exactly rounded summation so results do not depend on
evaluation order.

The non-edge baseline is the mean cosine over a seeded uniform sample
of ordered classified pairs (u, v), u != v, with no u->v edge.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embedding import UserVector
from .errors import MissingAssignmentError, MissingVectorError
from .graph import CATEGORIES, CategorySummary, FollowGraph, RatioCategory

N_BINS = 20


@dataclass
class CrossCategoryCounts:
    """4x4 edge counts (follower category -> followee category)."""

    matrix: np.ndarray
    excluded: int  # edges with an unclassified endpoint

    @property
    def total(self) -> int:
        return int(self.matrix.sum()) + self.excluded


def _category_index(
    graph: FollowGraph, assignments: Mapping[str, RatioCategory]
) -> dict[str, int]:
    """Map graph users to 0..3 for classified categories, -1 otherwise."""
    position = {c: i for i, c in enumerate(CATEGORIES)}
    index = {}
    for user in graph.nodes:
        category = assignments.get(user)
        if category is None:
            raise MissingAssignmentError(user)
        index[user] = position.get(category, -1)
    return index


def count_cross_edges(
    graph: FollowGraph, assignments: Mapping[str, RatioCategory]
) -> CrossCategoryCounts:
    """Count edges per ordered category pair, both endpoints classified."""
    index = _category_index(graph, assignments)
    matrix = np.zeros((4, 4), dtype=np.int64)
    excluded = 0
    for source, target in graph.edges():
        ci, cj = index[source], index[target]
        if ci < 0 or cj < 0:
            excluded += 1
        else:
            matrix[ci, cj] += 1
    return CrossCategoryCounts(matrix=matrix, excluded=excluded)


@dataclass
class SimilarityHistogram:
    """Normalized 20-bin histogram of cosine values over [0, 1].

    Negative values are clamped into bin 0 and tallied; a value of
    exactly 1.0 lands in the last bin.  ``heights`` sum to 1 whenever
    ``total`` is positive.
    """

    heights: np.ndarray
    counts: np.ndarray
    total: int
    clamped_negative: int
    flagged: int = 0

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, N_BINS + 1)


def similarity_histogram(values, *, flagged_count: int = 0) -> SimilarityHistogram:
    """Bin cosine values into the fixed [0, 1] histogram."""
    array = np.asarray(list(values), dtype=np.float64)
    counts = np.zeros(N_BINS, dtype=np.int64)
    clamped = 0
    if array.size:
        clamped = int(np.count_nonzero(array < 0.0))
        bins = np.clip(np.floor(array * N_BINS).astype(np.int64), 0, N_BINS - 1)
        np.add.at(counts, bins, 1)
    total = int(array.size)
    heights = counts / total if total else np.zeros(N_BINS)
    return SimilarityHistogram(
        heights=heights,
        counts=counts,
        total=total,
        clamped_negative=clamped,
        flagged=flagged_count,
    )


@dataclass
class _EdgePairs:
    """Per-cell cosine values plus the pieces outside the 4x4 cells."""

    cell_values: dict[tuple[int, int], np.ndarray]
    cell_flagged: np.ndarray
    unclassified_values: np.ndarray
    unclassified_flagged: int
    skipped_missing: int


def _vector_rows(vectors: Mapping[str, object]) -> tuple[dict[str, int], np.ndarray]:
    ids = sorted(vectors)
    if not ids:
        return {}, np.zeros((0, 0))
    arrays = []
    for uid in ids:
        v = vectors[uid]
        arrays.append(v.values if isinstance(v, UserVector) else np.asarray(v, float))
    return {uid: i for i, uid in enumerate(ids)}, np.vstack(arrays)


def _collect_edge_pairs(
    graph: FollowGraph,
    index: Mapping[str, int],
    rows: Mapping[str, int],
    matrix: np.ndarray,
    norms: np.ndarray,
) -> _EdgePairs:
    src_rows, tgt_rows, cells = [], [], []
    skipped = 0
    for source, target in graph.edges():
        ci, cj = index[source], index[target]
        rs = rows.get(source)
        rt = rows.get(target)
        if rs is None or rt is None:
            # only possible for unclassified endpoints; classified ones
            # were checked up front
            skipped += 1
            continue
        src_rows.append(rs)
        tgt_rows.append(rt)
        cells.append(ci * 4 + cj if ci >= 0 and cj >= 0 else -1)
    if not src_rows:
        empty_cells = {(i, j): np.empty(0) for i in range(4) for j in range(4)}
        return _EdgePairs(
            empty_cells, np.zeros((4, 4), np.int64), np.empty(0), 0, skipped
        )

    src = np.array(src_rows)
    tgt = np.array(tgt_rows)
    cell = np.array(cells)
    cos, flagged = _pair_cosines(matrix, norms, src, tgt)

    cell_values: dict[tuple[int, int], np.ndarray] = {}
    cell_flagged = np.zeros((4, 4), dtype=np.int64)
    for ci in range(4):
        for cj in range(4):
            mask = cell == ci * 4 + cj
            cell_values[(ci, cj)] = cos[mask & ~flagged]
            cell_flagged[ci, cj] = int(np.count_nonzero(mask & flagged))
    outside = cell == -1
    return _EdgePairs(
        cell_values=cell_values,
        cell_flagged=cell_flagged,
        unclassified_values=cos[outside & ~flagged],
        unclassified_flagged=int(np.count_nonzero(outside & flagged)),
        skipped_missing=skipped,
    )


def _pair_cosines(matrix, norms, src, tgt) -> tuple[np.ndarray, np.ndarray]:
    dots = np.einsum("ij,ij->i", matrix[src], matrix[tgt])
    scale = norms[src] * norms[tgt]
    flagged = scale == 0.0
    cos = np.zeros_like(dots)
    good = ~flagged
    cos[good] = np.clip(dots[good] / scale[good], -1.0, 1.0)
    return cos, flagged


def _exact_mean(values: np.ndarray) -> float | None:
    if values.size == 0:
        return None
    return math.fsum(values.tolist()) / values.size


@dataclass
class CrossCategorySimilarity:
    """Mean cosine per ordered category pair plus global aggregates.

    Cells with no usable pairs carry NaN in ``means`` and 0 in
    ``pair_counts``; reports render them as absent.  ``edge_mean``
    covers every edge with both vectors present (including edges
    touching unclassified users), always excluding flagged pairs.
    """

    means: np.ndarray
    pair_counts: np.ndarray
    flagged_counts: np.ndarray
    edge_mean: float | None
    edge_pairs: int
    edge_flagged: int
    unclassified_edge_pairs: int
    unclassified_edge_sum: float
    skipped_missing_vector: int
    nonedge_mean: float | None
    nonedge_pairs: int
    nonedge_flagged: int
    baseline_seed: int

    @property
    def homophily_gap(self) -> float | None:
        if self.edge_mean is None or self.nonedge_mean is None:
            return None
        return self.edge_mean - self.nonedge_mean


def _sample_nonedge_pairs(
    graph: FollowGraph,
    classified_ids: Sequence[str],
    rows: Mapping[str, int],
    pairs: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform sample of ordered classified non-adjacent pairs."""
    n = len(classified_ids)
    rng = np.random.default_rng(seed)
    if n < 2 or pairs <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    row_ids = np.array([rows[uid] for uid in classified_ids])
    classified_rows = set(row_ids.tolist())
    edge_codes = set()
    classified_edges = 0
    for source, target in graph.edges():
        rs, rt = rows.get(source), rows.get(target)
        if rs is not None and rt is not None:
            edge_codes.add(rs * len(rows) + rt)
            if rs in classified_rows and rt in classified_rows:
                classified_edges += 1
    if n * (n - 1) - classified_edges <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    src_out, tgt_out = [], []
    accepted = 0
    while accepted < pairs:
        batch = max(1024, pairs - accepted)
        u = rng.integers(0, n, size=batch)
        v = rng.integers(0, n, size=batch)
        ru = row_ids[u]
        rv = row_ids[v]
        codes = ru * len(rows) + rv
        keep = np.array(
            [a != b and c not in edge_codes for a, b, c in zip(ru, rv, codes)]
        )
        ru, rv = ru[keep], rv[keep]
        take = min(ru.size, pairs - accepted)
        src_out.append(ru[:take])
        tgt_out.append(rv[:take])
        accepted += take
    return np.concatenate(src_out), np.concatenate(tgt_out)


def mean_similarity_matrix(
    graph: FollowGraph,
    assignments: Mapping[str, RatioCategory],
    vectors: Mapping[str, object],
    *,
    baseline_pairs: int = 100_000,
    seed: int = 0,
) -> CrossCategorySimilarity:
    """Per-cell and global mean cosine over edges, plus non-edge baseline."""
    sim, _ = similarity_analysis(
        graph, assignments, vectors, baseline_pairs=baseline_pairs, seed=seed
    )
    return sim


def similarity_analysis(
    graph: FollowGraph,
    assignments: Mapping[str, RatioCategory],
    vectors: Mapping[str, object],
    *,
    baseline_pairs: int = 100_000,
    seed: int = 0,
) -> tuple[
    CrossCategorySimilarity,
    dict[tuple[RatioCategory, RatioCategory], SimilarityHistogram],
]:
    """One pass over edges feeding both the mean matrix and histograms."""
    index = _category_index(graph, assignments)
    classified = sorted(uid for uid, ci in index.items() if ci >= 0)
    for uid in classified:
        if uid not in vectors:
            raise MissingVectorError(uid)
    rows, matrix = _vector_rows(vectors)
    norms = np.linalg.norm(matrix, axis=1) if matrix.size else np.zeros(len(rows))

    pairs = _collect_edge_pairs(graph, index, rows, matrix, norms)

    means = np.full((4, 4), np.nan)
    pair_counts = np.zeros((4, 4), dtype=np.int64)
    cell_sums = np.zeros((4, 4))
    for (ci, cj), values in pairs.cell_values.items():
        pair_counts[ci, cj] = values.size
        if values.size:
            cell_sums[ci, cj] = math.fsum(values.tolist())
            means[ci, cj] = cell_sums[ci, cj] / values.size

    unclassified_sum = math.fsum(pairs.unclassified_values.tolist())
    edge_pairs = int(pair_counts.sum()) + pairs.unclassified_values.size
    edge_sum = math.fsum(cell_sums.ravel().tolist()) + unclassified_sum
    edge_mean = edge_sum / edge_pairs if edge_pairs else None

    src, tgt = _sample_nonedge_pairs(
        graph, classified, rows, baseline_pairs, seed
    )
    if src.size:
        cos, flagged = _pair_cosines(matrix, norms, src, tgt)
        nonedge_values = cos[~flagged]
        nonedge_flagged = int(np.count_nonzero(flagged))
        nonedge_mean = _exact_mean(nonedge_values)
        nonedge_pairs = int(src.size)
    else:
        nonedge_mean, nonedge_pairs, nonedge_flagged = None, 0, 0

    similarity = CrossCategorySimilarity(
        means=means,
        pair_counts=pair_counts,
        flagged_counts=pairs.cell_flagged,
        edge_mean=edge_mean,
        edge_pairs=edge_pairs,
        edge_flagged=int(pairs.cell_flagged.sum()) + pairs.unclassified_flagged,
        unclassified_edge_pairs=int(pairs.unclassified_values.size),
        unclassified_edge_sum=unclassified_sum,
        skipped_missing_vector=pairs.skipped_missing,
        nonedge_mean=nonedge_mean,
        nonedge_pairs=nonedge_pairs,
        nonedge_flagged=nonedge_flagged,
        baseline_seed=seed,
    )
    histograms = {
        (CATEGORIES[ci], CATEGORIES[cj]): similarity_histogram(
            pairs.cell_values[(ci, cj)],
            flagged_count=int(pairs.cell_flagged[ci, cj]),
        )
        for ci in range(4)
        for cj in range(4)
    }
    return similarity, histograms


# ---------------------------------------------------------------------------
# report emission


def _fmt(value: float) -> str:
    return format(value, ".12g")


def _write_matrix_csv(
    path: Path, matrix: np.ndarray, formatter
) -> None:
    header = ",".join(["follower_category"] + [c.value for c in CATEGORIES])
    lines = [header]
    for i, cat in enumerate(CATEGORIES):
        cells = [formatter(matrix[i, j]) for j in range(4)]
        lines.append(",".join([cat.value] + cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_report(
    counts: CrossCategoryCounts,
    similarity: CrossCategorySimilarity,
    histograms: Mapping[tuple[RatioCategory, RatioCategory], SimilarityHistogram],
    category_summary: CategorySummary,
    out_dir: str | Path,
    *,
    config: Mapping[str, object] | None = None,
    render_figures: bool = True,
) -> list[Path]:
    """Write the report directory: CSV tables, histograms, JSON, figures.

    Returns the list of files written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    counts_csv = out_dir / "edge_counts.csv"
    _write_matrix_csv(counts_csv, counts.matrix, lambda v: str(int(v)))
    written.append(counts_csv)

    sim_csv = out_dir / "mean_similarity.csv"
    _write_matrix_csv(
        sim_csv,
        similarity.means,
        lambda v: "" if np.isnan(v) else _fmt(float(v)),
    )
    written.append(sim_csv)

    summary_csv = out_dir / "category_summary.csv"
    rows = ["category,users,mean_followees,mean_followers"]
    for cat in (*CATEGORIES, RatioCategory.UNCLASSIFIED):
        stats = category_summary.stats.get(cat)
        if stats is None:
            continue
        rows.append(
            f"{cat.value},{stats.count},{_fmt(stats.mean_followees)},"
            f"{_fmt(stats.mean_followers)}"
        )
    summary_csv.write_text("\n".join(rows) + "\n", encoding="utf-8")
    written.append(summary_csv)

    for (ca, cb), hist in sorted(
        histograms.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        hist_path = out_dir / f"hist_{ca.value}_to_{cb.value}.csv"
        lines = ["bin,lower,upper,count,height"]
        edges = hist.bin_edges
        for b in range(N_BINS):
            lines.append(
                f"{b},{_fmt(edges[b])},{_fmt(edges[b + 1])},"
                f"{int(hist.counts[b])},{_fmt(float(hist.heights[b]))}"
            )
        hist_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(hist_path)

    summary = _summary_dict(counts, similarity, histograms, category_summary, config)
    summary_path = out_dir / "summary.json"
    with summary_path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    written.append(summary_path)

    if render_figures:
        from . import figures

        written.extend(
            figures.render_report_figures(
                counts, similarity, histograms, out_dir / "figures"
            )
        )
    return written


def _nan_to_none(value) -> float | None:
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def _summary_dict(counts, similarity, histograms, category_summary, config):
    hist_section = {}
    for (ca, cb), hist in histograms.items():
        hist_section[f"{ca.value}->{cb.value}"] = {
            "counts": hist.counts.tolist(),
            "heights": hist.heights.tolist(),
            "total": hist.total,
            "clamped_negative": hist.clamped_negative,
            "flagged": hist.flagged,
        }
    categories = {}
    for cat, stats in category_summary.stats.items():
        categories[cat.value] = {
            "users": stats.count,
            "mean_followees": stats.mean_followees,
            "mean_followers": stats.mean_followers,
        }
    return {
        "edge_counts": {
            "matrix": counts.matrix.tolist(),
            "excluded_unclassified": counts.excluded,
            "total_edges": counts.total,
            "categories": [c.value for c in CATEGORIES],
        },
        "similarity": {
            "means": [
                [_nan_to_none(similarity.means[i, j]) for j in range(4)]
                for i in range(4)
            ],
            "pair_counts": similarity.pair_counts.tolist(),
            "flagged_counts": similarity.flagged_counts.tolist(),
            "edge_mean": _nan_to_none(similarity.edge_mean),
            "edge_pairs": similarity.edge_pairs,
            "edge_flagged": similarity.edge_flagged,
            "unclassified_edge_pairs": similarity.unclassified_edge_pairs,
            "skipped_missing_vector": similarity.skipped_missing_vector,
            "nonedge_mean": _nan_to_none(similarity.nonedge_mean),
            "nonedge_pairs": similarity.nonedge_pairs,
            "nonedge_flagged": similarity.nonedge_flagged,
            "baseline_seed": similarity.baseline_seed,
            "homophily_gap": _nan_to_none(similarity.homophily_gap),
        },
        "histograms": hist_section,
        "categories": categories,
        "config": dict(config) if config else {},
    }
