"""Dynamic-graph node embeddings with in-training anchor alignment.

Per-snapshot node2vec embeddings live in one space thanks to either an
alignment regularizer mixed into the training loss (anchored on the previous
snapshot's embedding) or post-hoc orthogonal Procrustes mapping; aggregated
embeddings are scored by link prediction on the held-out final snapshot.
"""

from .aggregation import AggregationSpec, aggregate, fildne_unrolled_weights
from .alignment import (
    AlignmentRegularizer,
    LossCombiner,
    LossParts,
    LossTrace,
    alignment_loss_all,
    alignment_loss_ref,
    alignment_loss_weighted,
    normalized_weights,
)
from .embeddings import EmbeddingMatrix
from .evaluation import (
    EvalReport,
    StudyRow,
    evaluate_method,
    mean_ranks,
    prev_next_study,
)
from .graph import (
    Snapshot,
    SnapshotPlan,
    TemporalGraph,
    common_nodes,
    parse_temporal_edgelist,
    split_snapshots,
    write_temporal_edgelist,
)
from .linkpred import (
    LinkPredDataset,
    LogisticConfig,
    LogisticModel,
    auc,
    build_dataset,
    hadamard_features,
    train_logistic,
)
from .pipeline import MethodSpec, Pipeline, RunConfig, load_config, run_pipeline, validate_config
from .procrustes import OrthogonalMap, align_posthoc, orthogonal_procrustes
from .scoring import (
    ReferenceSet,
    ScoreMap,
    edge_jaccard_scores,
    select_top_percent,
    temporal_betweenness,
    temporal_betweenness_scores,
)
from .sgns import NegativeSampler, TrainConfig, sgns_batch_loss, train
from .synthetic import two_community_temporal_graph
from .walks import generate_walks, walk_pairs

__version__ = "0.1.0"

__all__ = [
    "AggregationSpec",
    "AlignmentRegularizer",
    "EmbeddingMatrix",
    "EvalReport",
    "LinkPredDataset",
    "LogisticConfig",
    "LogisticModel",
    "LossCombiner",
    "LossParts",
    "LossTrace",
    "MethodSpec",
    "OrthogonalMap",
    "Pipeline",
    "ReferenceSet",
    "RunConfig",
    "ScoreMap",
    "Snapshot",
    "SnapshotPlan",
    "StudyRow",
    "TemporalGraph",
    "TrainConfig",
    "NegativeSampler",
    "aggregate",
    "align_posthoc",
    "alignment_loss_all",
    "alignment_loss_ref",
    "alignment_loss_weighted",
    "auc",
    "build_dataset",
    "common_nodes",
    "edge_jaccard_scores",
    "evaluate_method",
    "fildne_unrolled_weights",
    "generate_walks",
    "hadamard_features",
    "load_config",
    "mean_ranks",
    "normalized_weights",
    "orthogonal_procrustes",
    "parse_temporal_edgelist",
    "prev_next_study",
    "run_pipeline",
    "select_top_percent",
    "sgns_batch_loss",
    "split_snapshots",
    "temporal_betweenness",
    "temporal_betweenness_scores",
    "train",
    "train_logistic",
    "two_community_temporal_graph",
    "validate_config",
    "walk_pairs",
    "write_temporal_edgelist",
]
