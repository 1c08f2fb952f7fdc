"""CACTUS: abstraction-based explainable classification.

Tabular attributes are abstracted into discrete flips, one weighted
knowledge graph is built per class, and records are classified by either
conditional probabilities or corrected PageRank significance, alongside a
suite of interpretability artifacts (ranks, communities, correlations,
decision trees, distribution plots).
"""

from .abstraction import (
    AbstractTable,
    Flip,
    FlipSchema,
    abstract_table,
    choose_threshold,
    flip_probabilities,
    infer_schema,
)
from .classify import (
    ClassificationReport,
    RankReport,
    balanced_accuracy,
    classify_pagerank,
    classify_probabilistic,
    classify_table,
    evaluate_kfold,
    evaluate_resubstitution,
    flip_rank,
    marker_rank,
    rank_report,
)
from .community import (
    Partition,
    greedy_communities,
    label_propagation,
    louvain,
    partition_quality,
)
from .config import RunConfig, load_config
from .correlate import (
    CorrelationResult,
    correlation_graph,
    correlation_matrix,
    laplacian_centrality,
    mst,
    preselect_columns,
)
from .dtree import DecisionTree, fit_tree
from .errors import CactusError, ConfigError, DataError, GraphError
from .graphs import WeightedGraph
from .ingest import (
    DataTable,
    Provenance,
    binarise_labels,
    load_table,
    recode_thyroid_diagnosis,
    stratify,
)
from .kgraph import (
    KnowledgeGraph,
    build_graph,
    corrected_significance,
    export_graph,
    pagerank,
    score_graph,
)
from .pipeline import RunManifest, run

__version__ = "0.1.0"
