"""Grid search over the ensemble space and the derived evaluation tasks.

The search evaluates every distinct read-once combination of the configured
sources (or a seeded stratified sample of them) against the gold standard,
then reports top-k lists per metric, the precision/recall Pareto set,
single-system baselines, and the ensembles that beat every single system.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import seeds
from .errors import ConfigError, ValidationError
from .expr import (
    SEMANTIC,
    ExprTree,
    Leaf,
    And,
    assert_union_only,
    enumerate_ensembles,
    to_string,
    tree_size,
    tree_sources,
)
from .masks import CharMask, majority_vote, merge_cui_layers, to_char_mask, to_cui_mask
from .metrics import (
    CuiMetricsResult,
    MetricsResult,
    char_prf,
    confusion_counts,
    doc_level_cui_prf,
    mention_level_cui_prf,
)
from .model import ALL_GROUPS, AnnotationStore, filter_by_group

EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"

DOC_LEVEL = "doc"
MENTION_LEVEL = "mention"


@dataclass(frozen=True)
class SearchConfig:
    """Parameters of one grid search run.

    Singleton expressions are always evaluated (they anchor the baselines);
    in SAMPLED mode the budget is spent on the remaining size strata.
    """

    sources: tuple[str, ...]
    group: str = ALL_GROUPS
    min_size: int = 1
    max_size: Optional[int] = None
    mode: str = EXHAUSTIVE
    sample_budget: Optional[int] = None
    seed: int = 0
    top_k: int = 10
    beat_singles_f1_only: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.mode not in (EXHAUSTIVE, SAMPLED):
            raise ConfigError(f"unknown search mode {self.mode!r}")
        if self.mode == SAMPLED and (self.sample_budget is None or self.sample_budget < 1):
            raise ConfigError("sampled mode needs a sample budget >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class ScoredEnsemble:
    expression: str
    size: int
    metrics: MetricsResult


@dataclass(frozen=True)
class SearchResult:
    """Ranked views over the evaluated ensemble space.

    Every expression string re-parses and re-evaluates to its reported
    counts; the Pareto set keeps ensembles no other ensemble beats strictly
    on both precision and recall.
    """

    group: str
    by_f1: tuple[ScoredEnsemble, ...]
    by_precision: tuple[ScoredEnsemble, ...]
    by_recall: tuple[ScoredEnsemble, ...]
    pareto: tuple[ScoredEnsemble, ...]
    singles: Mapping[str, MetricsResult]
    beating_all_singles: tuple[ScoredEnsemble, ...]
    evaluated: tuple[ScoredEnsemble, ...] = field(repr=False)


def _doc_vector(store: AnnotationStore, source: str, doc_ids: Sequence[str]) -> np.ndarray:
    """All documents' masks for one source concatenated in doc-id order."""
    parts = []
    for doc_id in doc_ids:
        length = store.document(doc_id).length
        bits = np.zeros(length, dtype=bool)
        for ann in store.annotations_for(source, doc_id):
            bits[ann.begin : ann.end] = True
        parts.append(bits)
    if not parts:
        return np.zeros(0, dtype=bool)
    return np.concatenate(parts)


def _eval_vector(tree: ExprTree, vectors: Mapping[str, np.ndarray]) -> np.ndarray:
    if isinstance(tree, Leaf):
        return vectors[tree.source]
    left = _eval_vector(tree.left, vectors)
    right = _eval_vector(tree.right, vectors)
    if isinstance(tree, And):
        return left & right
    return left | right


def _pareto_front(scored: Sequence[ScoredEnsemble]) -> tuple[ScoredEnsemble, ...]:
    """Ensembles not strictly dominated in both precision and recall."""
    front = []
    for item in scored:
        dominated = any(
            other.metrics.precision > item.metrics.precision
            and other.metrics.recall > item.metrics.recall
            for other in scored
        )
        if not dominated:
            front.append(item)
    front.sort(key=lambda s: (-s.metrics.precision, -s.metrics.recall, s.expression))
    return tuple(front)


def _stratified_sample(
    trees: list[ExprTree], budget: int, seed: int
) -> list[ExprTree]:
    """Seeded uniform sample without replacement, stratified by ensemble size
    with quotas proportional to stratum size (largest remainder)."""
    total = len(trees)
    if budget >= total:
        return trees
    strata: dict[int, list[ExprTree]] = {}
    for tree in trees:
        strata.setdefault(tree_size(tree), []).append(tree)
    sizes = sorted(strata)
    quotas = {k: budget * len(strata[k]) // total for k in sizes}
    remainders = sorted(
        sizes,
        key=lambda k: (-(budget * len(strata[k]) % total), k),
    )
    leftover = budget - sum(quotas.values())
    for k in remainders:
        if leftover <= 0:
            break
        if quotas[k] < len(strata[k]):
            quotas[k] += 1
            leftover -= 1
    sampled: list[ExprTree] = []
    for k in sizes:
        pool = strata[k]
        quota = min(quotas[k], len(pool))
        if quota == len(pool):
            sampled.extend(pool)
        else:
            rng = seeds.derive_rng(seed, "sample", k)
            sampled.extend(pool[i] for i in sorted(rng.sample(range(len(pool)), quota)))
    return sampled


def grid_search(
    store: AnnotationStore, gold_source: str, config: SearchConfig
) -> SearchResult:
    """Evaluate the Boolean combination space of ``config.sources`` against
    the gold source, restricted to ``config.group``."""
    for source in (gold_source, *config.sources):
        if source not in store.sources:
            raise ConfigError(f"source {source!r} not present in the store")
    if len(set(config.sources)) != len(config.sources):
        raise ConfigError("duplicate sources in search config")
    max_size = config.max_size if config.max_size is not None else len(config.sources)

    filtered = filter_by_group(store, config.group)
    doc_ids = filtered.doc_ids
    gold_vec = _doc_vector(filtered, gold_source, doc_ids)
    vectors = {s: _doc_vector(filtered, s, doc_ids) for s in config.sources}

    trees = enumerate_ensembles(config.sources, config.min_size, max_size, SEMANTIC)
    if config.min_size > 1:
        trees = [Leaf(s) for s in sorted(config.sources)] + trees
    if config.mode == SAMPLED:
        singles = [t for t in trees if tree_size(t) == 1]
        rest = [t for t in trees if tree_size(t) > 1]
        trees = singles + _stratified_sample(rest, config.sample_budget, config.seed)

    def score(tree: ExprTree) -> ScoredEnsemble:
        pred = _eval_vector(tree, vectors)
        tp, fp, fn = confusion_counts(gold_vec, pred)
        return ScoredEnsemble(to_string(tree), tree_size(tree), MetricsResult.from_counts(tp, fp, fn))

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            scored = list(pool.map(score, trees))
    else:
        scored = [score(t) for t in trees]

    def ranked(metric: str) -> tuple[ScoredEnsemble, ...]:
        return tuple(
            sorted(scored, key=lambda s: (-getattr(s.metrics, metric), s.expression))[
                : config.top_k
            ]
        )

    singles_map = {s.expression: s.metrics for s in scored if s.size == 1}

    def beats_all(item: ScoredEnsemble) -> bool:
        for single in singles_map.values():
            if config.beat_singles_f1_only:
                if item.metrics.f1 <= single.f1:
                    return False
            elif (
                item.metrics.f1 <= single.f1
                or item.metrics.precision <= single.precision
                or item.metrics.recall <= single.recall
            ):
                return False
        return True

    beating = tuple(
        sorted(
            (s for s in scored if beats_all(s)),
            key=lambda s: (-s.metrics.f1, s.expression),
        )
    )
    return SearchResult(
        group=config.group,
        by_f1=ranked("f1"),
        by_precision=ranked("precision"),
        by_recall=ranked("recall"),
        pareto=_pareto_front(scored),
        singles=dict(sorted(singles_map.items())),
        beating_all_singles=beating,
        evaluated=tuple(scored),
    )


def corpus_masks(
    store: AnnotationStore, source: str, group: str = ALL_GROUPS
) -> dict[str, CharMask]:
    """Per-document coverage masks for one source, optionally group-filtered."""
    filtered = filter_by_group(store, group)
    return {
        doc_id: to_char_mask(
            filtered.annotations_for(source, doc_id), doc_id, store.document(doc_id).length
        )
        for doc_id in store.doc_ids
    }


def evaluate_expression(
    store: AnnotationStore, tree: ExprTree, gold_source: str, group: str = ALL_GROUPS
) -> MetricsResult:
    """Score one Boolean combination against gold at character level."""
    for source in (gold_source, *tree_sources(tree)):
        if source not in store.sources:
            raise ConfigError(f"source {source!r} not present in the store")
    filtered = filter_by_group(store, group)
    doc_ids = filtered.doc_ids
    gold_vec = _doc_vector(filtered, gold_source, doc_ids)
    vectors = {s: _doc_vector(filtered, s, doc_ids) for s in tree_sources(tree)}
    tp, fp, fn = confusion_counts(gold_vec, _eval_vector(tree, vectors))
    return MetricsResult.from_counts(tp, fp, fn)


def cross_group_union_merge(
    store: AnnotationStore, assignments: Mapping[str, str], gold_source: str
) -> MetricsResult:
    """Union the group-filtered annotations of per-group assigned sources and
    score the merge against the unfiltered (all-groups) gold standard."""
    if not assignments:
        raise ConfigError("no group assignments given")
    universe = store.group_universe
    for group, source in sorted(assignments.items()):
        if universe and group not in universe:
            raise ConfigError(f"unknown group {group!r}")
        if source not in store.sources:
            raise ConfigError(f"source {source!r} not present in the store")
        if not any(
            store.annotations_for(source, doc_id, group=group) for doc_id in store.doc_ids
        ):
            raise ConfigError(f"source {source!r} has no annotations for group {group!r}")
    gold = corpus_masks(store, gold_source)
    merged: dict[str, CharMask] = {}
    for doc_id in store.doc_ids:
        length = store.document(doc_id).length
        bits = np.zeros(length, dtype=bool)
        for group, source in sorted(assignments.items()):
            for ann in store.annotations_for(source, doc_id, group=group):
                bits[ann.begin : ann.end] = True
        merged[doc_id] = CharMask(doc_id, bits)
    return char_prf(gold, merged)


def majority_vote_eval(
    store: AnnotationStore,
    sources: Sequence[str],
    gold_source: str,
    group: str = ALL_GROUPS,
    seed: int = 0,
) -> MetricsResult:
    """Score the per-character majority vote of the given sources."""
    if len(sources) < 2:
        raise ValidationError("majority vote needs at least 2 sources")
    for source in (gold_source, *sources):
        if source not in store.sources:
            raise ConfigError(f"source {source!r} not present in the store")
    filtered = filter_by_group(store, group)
    gold = corpus_masks(filtered, gold_source)
    voted: dict[str, CharMask] = {}
    for doc_id in filtered.doc_ids:
        length = filtered.document(doc_id).length
        masks = [
            to_char_mask(filtered.annotations_for(s, doc_id), doc_id, length) for s in sources
        ]
        voted[doc_id] = majority_vote(masks, seed)
    return char_prf(gold, voted)


def cui_ensemble_eval(
    store: AnnotationStore,
    tree: ExprTree,
    gold_source: str,
    level: str = DOC_LEVEL,
    seed: int = 0,
    group: str = ALL_GROUPS,
) -> CuiMetricsResult:
    """Concept-matching score of a union-only ensemble.

    Document level: the predicted concept set per document is the union of
    the operands' sets.  Mention level: operand concept masks are merged via
    the majority / longest-span / seeded cascade, then scored per character.
    Intersection nodes are rejected: their concept semantics are undefined.
    """
    assert_union_only(tree)
    operands = tree_sources(tree)
    for source in (gold_source, *operands):
        if source not in store.sources:
            raise ConfigError(f"source {source!r} not present in the store")
    filtered = filter_by_group(store, group)

    if level == DOC_LEVEL:
        gold_sets = {}
        pred_sets = {}
        for doc_id in filtered.doc_ids:
            gold_sets[doc_id] = {
                a.cui for a in filtered.annotations_for(gold_source, doc_id) if a.cui
            }
            pred_sets[doc_id] = {
                a.cui
                for source in operands
                for a in filtered.annotations_for(source, doc_id)
                if a.cui
            }
        return doc_level_cui_prf(gold_sets, pred_sets)

    if level != MENTION_LEVEL:
        raise ConfigError(f"unknown level {level!r}; expected 'doc' or 'mention'")
    gold_masks = {}
    pred_masks = {}
    for doc_id in filtered.doc_ids:
        length = filtered.document(doc_id).length
        gold_masks[doc_id] = to_cui_mask(
            filtered.annotations_for(gold_source, doc_id), doc_id, length,
            seeds.digest(seed, "gold-layer"),
        )
        layers = [
            to_cui_mask(
                filtered.annotations_for(source, doc_id), doc_id, length,
                seeds.digest(seed, "layer", source),
            )
            for source in operands
        ]
        pred_masks[doc_id] = merge_cui_layers(layers, seed)
    return mention_level_cui_prf(gold_masks, pred_masks)
