"""User embeddings, ratio categories, and homophily reports for follow graphs."""

__version__ = "0.1.0"

from .analysis import (
    CrossCategoryCounts,
    CrossCategorySimilarity,
    SimilarityHistogram,
    count_cross_edges,
    emit_report,
    mean_similarity_matrix,
    similarity_analysis,
    similarity_histogram,
)
from .corpus import (
    TokenCounts,
    Vocabulary,
    build_vocabulary,
    count_words,
    tokenize,
)
from .embedding import (
    EmbeddingModel,
    SppmiMatrix,
    UserVector,
    build_sppmi,
    cosine,
    cosine_flagged,
    factorize,
    project_many,
    project_out_of_sample,
    sample_vectors,
    split_sample,
    truncated_svd,
)
from .graph import (
    CATEGORIES,
    CategorySummary,
    FollowGraph,
    RatioCategory,
    classify,
    classify_users,
    follow_ratio,
    follow_ratios,
    summarize_categories,
)
from .ingest import (
    DatasetManifest,
    UserDocument,
    build_manifest,
    load_corpus,
    load_edges,
    load_model,
    save_model,
)
from .synth import SynthConfig, SynthResult, generate

__all__ = [
    "CATEGORIES",
    "CategorySummary",
    "CrossCategoryCounts",
    "CrossCategorySimilarity",
    "DatasetManifest",
    "EmbeddingModel",
    "FollowGraph",
    "RatioCategory",
    "SimilarityHistogram",
    "SppmiMatrix",
    "SynthConfig",
    "SynthResult",
    "TokenCounts",
    "UserDocument",
    "UserVector",
    "Vocabulary",
    "build_manifest",
    "build_sppmi",
    "build_vocabulary",
    "classify",
    "classify_users",
    "cosine",
    "cosine_flagged",
    "count_cross_edges",
    "count_words",
    "emit_report",
    "factorize",
    "follow_ratio",
    "follow_ratios",
    "generate",
    "load_corpus",
    "load_edges",
    "load_model",
    "mean_similarity_matrix",
    "project_many",
    "project_out_of_sample",
    "sample_vectors",
    "save_model",
    "similarity_analysis",
    "similarity_histogram",
    "split_sample",
    "summarize_categories",
    "tokenize",
    "truncated_svd",
]
