"""Boolean combination ensembles over named-entity annotation sets.

Combines annotation output from multiple extraction systems with set algebra
over character spans (union, intersection, majority vote), scores the
combinations against a gold standard at character and concept level, and
searches the combination space for optimal ensembles per semantic group.
"""

from .complementarity import ErrorSet, comp_prf, comp_rate, error_set
from .errors import (
    ConfigError,
    EnsembleError,
    ParseError,
    UnsupportedOperatorError,
    ValidationError,
)
from .expr import (
    SEMANTIC,
    SYNTACTIC,
    And,
    ExprSignature,
    ExprTree,
    Leaf,
    Or,
    enumerate_ensembles,
    evaluate,
    parse,
    to_string,
    tree_sources,
    truth_table_signature,
)
from .ingest import (
    DisambiguationPolicy,
    MappingOutcome,
    apply_group_mapping,
    disambiguate_overlaps,
    load_annotations,
    load_corpus_manifest,
    load_semantic_group_map,
    write_annotations,
    write_manifest,
)
from .masks import (
    CharMask,
    CuiMask,
    CuiRun,
    intersect,
    majority_vote,
    mask_to_spans,
    merge_cui_layers,
    to_char_mask,
    to_cui_mask,
    union,
)
from .metrics import (
    CuiMetricsResult,
    MetricsResult,
    bernoulli_ci,
    char_prf,
    ci_overlap_significant,
    doc_level_cui_prf,
    mention_level_cui_prf,
)
from .model import (
    ALL_GROUPS,
    GOLD_SOURCE,
    Annotation,
    AnnotationStore,
    DocumentRef,
    SemanticGroupMap,
    filter_by_group,
)
from .search import (
    DOC_LEVEL,
    EXHAUSTIVE,
    MENTION_LEVEL,
    SAMPLED,
    ScoredEnsemble,
    SearchConfig,
    SearchResult,
    corpus_masks,
    cross_group_union_merge,
    cui_ensemble_eval,
    evaluate_expression,
    grid_search,
    majority_vote_eval,
)
from .synth import SourceSpec, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "ALL_GROUPS",
    "And",
    "Annotation",
    "AnnotationStore",
    "CharMask",
    "ConfigError",
    "CuiMask",
    "CuiMetricsResult",
    "CuiRun",
    "DOC_LEVEL",
    "DisambiguationPolicy",
    "DocumentRef",
    "EXHAUSTIVE",
    "EnsembleError",
    "ErrorSet",
    "ExprSignature",
    "ExprTree",
    "GOLD_SOURCE",
    "Leaf",
    "MENTION_LEVEL",
    "MappingOutcome",
    "MetricsResult",
    "Or",
    "ParseError",
    "SAMPLED",
    "SEMANTIC",
    "SYNTACTIC",
    "ScoredEnsemble",
    "SearchConfig",
    "SearchResult",
    "SemanticGroupMap",
    "SourceSpec",
    "SynthSpec",
    "UnsupportedOperatorError",
    "ValidationError",
    "apply_group_mapping",
    "bernoulli_ci",
    "char_prf",
    "ci_overlap_significant",
    "comp_prf",
    "comp_rate",
    "corpus_masks",
    "cross_group_union_merge",
    "cui_ensemble_eval",
    "disambiguate_overlaps",
    "doc_level_cui_prf",
    "enumerate_ensembles",
    "error_set",
    "evaluate",
    "evaluate_expression",
    "filter_by_group",
    "generate",
    "grid_search",
    "intersect",
    "load_annotations",
    "load_corpus_manifest",
    "load_semantic_group_map",
    "majority_vote",
    "majority_vote_eval",
    "mask_to_spans",
    "mention_level_cui_prf",
    "merge_cui_layers",
    "parse",
    "to_char_mask",
    "to_cui_mask",
    "to_string",
    "tree_sources",
    "truth_table_signature",
    "union",
    "write_annotations",
    "write_manifest",
]
