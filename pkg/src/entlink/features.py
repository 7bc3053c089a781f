"""The five disambiguation features, each a real value in [0.0, 1.0].

Context-independent features (prior, name similarity, importance) depend only
on the candidate itself; context-dependent features (entity cooccurrence,
topic similarity) are computed against the window of already-resolved easy
entities around the mention.  Pairwise context scores are cached on the
document context so repeated candidates stay cheap.
"""

from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass, field

from .kb import WORD_RE, DictionarySet, EntityId
from .preprocess import Mention

FEATURE_NAMES = (
    "mention_entity_cooccurr",
    "mention_entity_jaccard",
    "entity_importance",
    "entity_entity_cooccurr",
    "entity_entity_topic_sim",
)


@dataclass(frozen=True, slots=True)
class FeatureVector:
    mention_entity_cooccurr: float
    mention_entity_jaccard: float
    entity_importance: float
    entity_entity_cooccurr: float
    entity_entity_topic_sim: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (
            self.mention_entity_cooccurr,
            self.mention_entity_jaccard,
            self.entity_importance,
            self.entity_entity_cooccurr,
            self.entity_entity_topic_sim,
        )

    def __post_init__(self) -> None:
        for name, value in zip(FEATURE_NAMES, self.as_tuple()):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"feature {name} = {value} outside [0, 1]")


class DocumentContext:
    """Easy entities resolved in the first pass, in document order, plus the
    cache of pairwise context-feature scores.

    Only non-sentinel entities may be added.  Reads are lock-free; cache
    inserts are serialized and last-write-wins (identical keys always map to
    identical values, so the race is benign).
    """

    def __init__(self) -> None:
        self.entries: list[tuple[int, EntityId]] = []
        self._positions: list[int] = []
        self._pair_cooccur: dict[tuple[str, str], float] = {}
        self._pair_topic_sim: dict[tuple[str, str], float] = {}
        self._lock = threading.Lock()

    def add(self, position: int, entity: EntityId) -> None:
        if entity.is_sentinel():
            raise ValueError("sentinel entities do not enter the document context")
        index = bisect.bisect(self._positions, position)
        self._positions.insert(index, position)
        self.entries.insert(index, (position, entity))

    def __len__(self) -> int:
        return len(self.entries)

    def window(
        self, position: int, budget: int, exclude_position: int | None = None
    ) -> tuple[EntityId, ...]:
        """Up to ``budget`` easy entities nearest to ``position`` by token
        distance, ties going to the earlier entity."""
        entries = self.entries
        if exclude_position is not None:
            entries = [e for e in entries if e[0] != exclude_position]
        if not entries or budget <= 0:
            return ()
        if len(entries) <= budget:
            return tuple(entity for _, entity in entries)
        positions = [p for p, _ in entries]
        right = bisect.bisect_left(positions, position)
        left = right - 1
        chosen: list[int] = []
        while len(chosen) < budget and (left >= 0 or right < len(entries)):
            left_dist = position - positions[left] if left >= 0 else None
            right_dist = positions[right] - position if right < len(entries) else None
            if right_dist is None or (left_dist is not None and left_dist <= right_dist):
                chosen.append(left)
                left -= 1
            else:
                chosen.append(right)
                right += 1
        chosen.sort()
        return tuple(entries[i][1] for i in chosen)

    def cached_pair(
        self, cache_name: str, candidate: EntityId, easy: EntityId
    ) -> float | None:
        cache = self._pair_cooccur if cache_name == "cooccur" else self._pair_topic_sim
        return cache.get((candidate.value, easy.value))

    def store_pair(
        self, cache_name: str, candidate: EntityId, easy: EntityId, value: float
    ) -> None:
        cache = self._pair_cooccur if cache_name == "cooccur" else self._pair_topic_sim
        with self._lock:
            cache[(candidate.value, easy.value)] = value


@dataclass(frozen=True)
class EntityContext:
    """Per-candidate context: where the mention sits, which candidate this
    is, and the easy-entity window surrounding it."""

    mention_position: int
    candidate_index: int
    window: tuple[EntityId, ...]
    document: DocumentContext | None = None


def display_name(entity: EntityId) -> str:
    """Human-readable name derived from the identifier; sentinels have none."""
    if entity.is_sentinel():
        return ""
    return entity.value.replace("_", " ")


def mention_entity_cooccurr(mention: Mention, candidate: EntityId) -> float:
    """The stored prior probability of the candidate for this mention."""
    return mention.prior_of(candidate)


def mention_entity_jaccard(surface: str, name: str) -> float:
    """Jaccard similarity between the case-folded token sets of the mention
    surface and the candidate's display name."""
    left = set(WORD_RE.findall(surface.casefold()))
    right = set(WORD_RE.findall(name.casefold()))
    if not left or not right:
        return 0.0
    return len(left & right) / len(left | right)


def entity_importance(candidate: EntityId, importance: dict[EntityId, float]) -> float:
    """Stored global importance; 0 when absent (sentinels always are)."""
    return importance.get(candidate, 0.0)


def _squash(x: float) -> float:
    # Monotone map from [0, inf) onto [0, 1).
    return x / (x + 1.0)


def _pair_cooccur(
    candidate: EntityId,
    easy: EntityId,
    dicts: DictionarySet,
    document: DocumentContext | None,
) -> float:
    if document is not None:
        cached = document.cached_pair("cooccur", candidate, easy)
        if cached is not None:
            return cached
    value = float(dicts.cooccur_count(candidate, easy))
    if document is not None:
        document.store_pair("cooccur", candidate, easy, value)
    return value


def entity_entity_cooccurr(
    candidate: EntityId, context: EntityContext, dicts: DictionarySet
) -> float:
    """Average cooccurrence count with the window entities, squashed into
    [0, 1) via x / (x + 1); 0 for an empty window."""
    if not context.window or candidate.is_sentinel():
        return 0.0
    total = sum(
        _pair_cooccur(candidate, easy, dicts, context.document)
        for easy in context.window
    )
    return _squash(total / len(context.window))


def _pair_topic_sim(
    candidate: EntityId,
    easy: EntityId,
    dicts: DictionarySet,
    document: DocumentContext | None,
) -> float:
    if document is not None:
        cached = document.cached_pair("topic_sim", candidate, easy)
        if cached is not None:
            return cached
    ontology = dicts.ontology
    candidate_topics = ontology.topics_of(candidate)
    easy_topics = ontology.topics_of(easy)
    best = 0.0
    for t_c in sorted(candidate_topics):
        distances = ontology.distances_from(t_c)
        for t_e in easy_topics:
            d = distances.get(t_e)
            if d is None:
                continue
            best = max(best, 1.0 if d <= 1 else 1.0 / d)
    if document is not None:
        document.store_pair("topic_sim", candidate, easy, best)
    return best


def entity_entity_topic_sim(
    candidate: EntityId, context: EntityContext, dicts: DictionarySet
) -> float:
    """Best inverse topic distance over all (candidate topic, window-entity
    topic) pairs.  A shared topic counts as similarity 1; unreachable or
    unmapped topics contribute 0."""
    if not context.window or candidate.is_sentinel():
        return 0.0
    return max(
        _pair_topic_sim(candidate, easy, dicts, context.document)
        for easy in context.window
    )


def compute_feature_vector(
    mention: Mention,
    candidate: EntityId,
    context: EntityContext,
    dicts: DictionarySet,
) -> FeatureVector:
    """All five features for one candidate.  Sentinels keep their prior but
    score 0 everywhere else, so only the prior separates NIL from MISC."""
    prior = mention_entity_cooccurr(mention, candidate)
    if candidate.is_sentinel():
        return FeatureVector(prior, 0.0, 0.0, 0.0, 0.0)
    return FeatureVector(
        mention_entity_cooccurr=prior,
        mention_entity_jaccard=mention_entity_jaccard(
            mention.surface, display_name(candidate)
        ),
        entity_importance=entity_importance(candidate, dicts.importance),
        entity_entity_cooccurr=entity_entity_cooccurr(candidate, context, dicts),
        entity_entity_topic_sim=entity_entity_topic_sim(candidate, context, dicts),
    )
