"""Knowledge-base entity space and the dictionaries consulted at annotation time.

Five data structures drive annotation: per-language mention priors, entity
cooccurrence counts, entity importance scores, the topic ontology and the
entity-to-topic map.  All of them live in plain UTF-8 text files (tab
separated, ``#`` comment lines) so they can be produced by the offline
builder, by external processes, or by hand.

Everything returned by :func:`load_dictionaries` is treated as immutable.
A loaded :class:`DictionarySet` may be shared freely across worker threads.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

NIL_LITERAL = "__NIL__"
MISC_LITERAL = "__MISC__"

#: Maximal runs of letters and digits; underscore is excluded on purpose so
#: that identifiers such as "Apple_Inc" split into word tokens.
WORD_RE = re.compile(r"[^\W_]+")

PRIOR_SUM_TOLERANCE = 1e-9


def surface_key(surface: str) -> str:
    """Normalization key shared by dictionary build time and query time.

    Case-folded word tokens joined by single spaces, so that "Eric  SCHMIDT",
    "eric schmidt" and "Eric-Schmidt" all collide on "eric schmidt".
    """
    return " ".join(WORD_RE.findall(surface.casefold()))


class DictionaryError(ValueError):
    """A dictionary file is malformed or violates a structural invariant."""


@dataclass(frozen=True, slots=True)
class EntityId:
    """A knowledge-base identifier, or one of the two sentinels.

    ``kind`` is ``"KB"`` for real entities, ``"NIL"`` for the no-entity
    sentinel and ``"MISC"`` for the outside-the-selected-set sentinel.
    """

    value: str
    kind: str = "KB"

    def is_sentinel(self) -> bool:
        return self.kind != "KB"

    def __str__(self) -> str:  # the wire form used in files and records
        return self.value


NIL = EntityId(NIL_LITERAL, "NIL")
MISC = EntityId(MISC_LITERAL, "MISC")


def parse_entity_id(raw: str) -> EntityId:
    """Map a wire identifier to an :class:`EntityId` (sentinels included)."""
    if raw == NIL_LITERAL:
        return NIL
    if raw == MISC_LITERAL:
        return MISC
    if not raw:
        raise DictionaryError("empty entity id")
    return EntityId(raw)


# ---------------------------------------------------------------------------
# File parsing helpers
# ---------------------------------------------------------------------------

def _records(path: Path) -> Iterator[tuple[int, list[str]]]:
    """Yield (line number, tab-separated fields), skipping comments/blanks."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line.split("\t")


def _fail(path: Path, lineno: int, message: str) -> None:
    raise DictionaryError(f"{path}:{lineno}: {message}")


# ---------------------------------------------------------------------------
# The five dictionaries
# ---------------------------------------------------------------------------

# priors[language][surface_key] -> ((EntityId, prior), ...) sorted by
# descending prior, ties broken by entity value.
PriorDict = dict[str, dict[str, tuple[tuple[EntityId, float], ...]]]


def load_priors(path: str | Path) -> PriorDict:
    """Load the mention-entity prior dictionary.

    File format, one record per line::

        language <TAB> surface <TAB> entity_id <TAB> prior

    Sentinels are written as the literals ``__NIL__`` and ``__MISC__``.
    For every (language, surface) the priors must sum to 1 within 1e-9.
    """
    path = Path(path)
    raw: dict[str, dict[str, dict[EntityId, float]]] = {}
    for lineno, fields in _records(path):
        if len(fields) != 4:
            _fail(path, lineno, f"expected 4 tab-separated fields, got {len(fields)}")
        language, surface, entity_raw, prior_raw = fields
        if not language:
            _fail(path, lineno, "empty language code")
        key = surface_key(surface)
        if not key:
            _fail(path, lineno, f"surface {surface!r} has no word characters")
        try:
            entity = parse_entity_id(entity_raw)
        except DictionaryError as exc:
            _fail(path, lineno, str(exc))
        try:
            prior = float(prior_raw)
        except ValueError:
            _fail(path, lineno, f"prior {prior_raw!r} is not a number")
        if not 0.0 <= prior <= 1.0:
            _fail(path, lineno, f"prior {prior} outside [0, 1] for surface {surface!r}")
        cands = raw.setdefault(language, {}).setdefault(key, {})
        if entity in cands:
            _fail(path, lineno, f"duplicate candidate {entity} for surface {surface!r}")
        cands[entity] = prior

    priors: PriorDict = {}
    for language, surfaces in raw.items():
        out: dict[str, tuple[tuple[EntityId, float], ...]] = {}
        for key, cands in surfaces.items():
            total = sum(cands.values())
            if abs(total - 1.0) > PRIOR_SUM_TOLERANCE:
                raise DictionaryError(
                    f"{path}: priors for surface {key!r} ({language}) sum to "
                    f"{total!r}, expected 1.0"
                )
            ordered = sorted(cands.items(), key=lambda item: (-item[1], item[0].value))
            out[key] = tuple(ordered)
        priors[language] = out
    return priors


CooccurDict = dict[EntityId, dict[EntityId, int]]


def load_cooccurrence(
    path: str | Path, *, top_k: int = 30, min_count: int = 10
) -> CooccurDict:
    """Load entity cooccurrence counts (``entity <TAB> neighbor <TAB> count``).

    The file must already honour the pruning contract: at most ``top_k``
    neighbors per entity and every count at least ``min_count``.  Violations
    are load errors, not silent fixes.
    """
    path = Path(path)
    cooccur: CooccurDict = {}
    for lineno, fields in _records(path):
        if len(fields) != 3:
            _fail(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
        a_raw, b_raw, count_raw = fields
        try:
            a = parse_entity_id(a_raw)
            b = parse_entity_id(b_raw)
        except DictionaryError as exc:
            _fail(path, lineno, str(exc))
        if a.is_sentinel() or b.is_sentinel():
            _fail(path, lineno, "sentinel entities cannot carry cooccurrence counts")
        if a == b:
            _fail(path, lineno, f"self pair {a}")
        try:
            count = int(count_raw)
        except ValueError:
            _fail(path, lineno, f"count {count_raw!r} is not an integer")
        if count < min_count:
            _fail(path, lineno, f"count {count} below the minimum of {min_count}")
        neighbors = cooccur.setdefault(a, {})
        if b in neighbors:
            _fail(path, lineno, f"duplicate neighbor {b} for {a}")
        if len(neighbors) >= top_k:
            _fail(path, lineno, f"{a} lists more than {top_k} neighbors")
        neighbors[b] = count
    return cooccur


ImportanceDict = dict[EntityId, float]


def load_importance(path: str | Path) -> ImportanceDict:
    """Load global entity importance scores (``entity <TAB> score``)."""
    path = Path(path)
    importance: ImportanceDict = {}
    for lineno, fields in _records(path):
        if len(fields) != 2:
            _fail(path, lineno, f"expected 2 tab-separated fields, got {len(fields)}")
        entity_raw, score_raw = fields
        try:
            entity = parse_entity_id(entity_raw)
        except DictionaryError as exc:
            _fail(path, lineno, str(exc))
        if entity.is_sentinel():
            _fail(path, lineno, "sentinel entities carry no importance score")
        try:
            score = float(score_raw)
        except ValueError:
            _fail(path, lineno, f"score {score_raw!r} is not a number")
        if not 0.0 <= score <= 1.0:
            _fail(path, lineno, f"score {score} outside [0, 1]")
        if entity in importance:
            _fail(path, lineno, f"duplicate importance entry for {entity}")
        importance[entity] = score
    return importance


@dataclass
class TopicOntology:
    """Topic nodes with parent edges plus the entity-to-topics map.

    Parent edges point child -> parent and must form a DAG.  Distance queries
    treat the edges as undirected, so two topics can reach each other through
    a common ancestor.
    """

    nodes: frozenset[str]
    parents: dict[str, tuple[str, ...]]
    entity_topics: dict[EntityId, frozenset[str]]
    _adjacency: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)
    _distances: dict[str, dict[str, int]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._adjacency:
            adj: dict[str, set[str]] = {node: set() for node in self.nodes}
            for child, ps in self.parents.items():
                for parent in ps:
                    adj[child].add(parent)
                    adj[parent].add(child)
            self._adjacency = {n: tuple(sorted(ns)) for n, ns in adj.items()}

    def topics_of(self, entity: EntityId) -> frozenset[str]:
        return self.entity_topics.get(entity, frozenset())

    def distances_from(self, topic: str) -> dict[str, int]:
        """BFS distance map from ``topic``; cached, reachable nodes only."""
        if topic not in self.nodes:
            raise ValueError(f"unknown topic id: {topic}")
        cached = self._distances.get(topic)
        if cached is not None:
            return cached
        dist = {topic: 0}
        queue = deque([topic])
        while queue:
            node = queue.popleft()
            for neighbor in self._adjacency[node]:
                if neighbor not in dist:
                    dist[neighbor] = dist[node] + 1
                    queue.append(neighbor)
        self._distances[topic] = dist
        return dist

    def distance(self, a: str, b: str) -> int | None:
        """Shortest undirected path length between two topics.

        Returns 0 when ``a == b`` and None when no path exists.  Unknown
        topic ids raise ValueError.
        """
        if a not in self.nodes:
            raise ValueError(f"unknown topic id: {a}")
        if b not in self.nodes:
            raise ValueError(f"unknown topic id: {b}")
        return self.distances_from(a).get(b)


def topic_distance(a: str, b: str, ontology: TopicOntology) -> int | None:
    """Module-level alias for :meth:`TopicOntology.distance`."""
    return ontology.distance(a, b)


def _find_cycle(parents: dict[str, tuple[str, ...]], nodes: frozenset[str]) -> list[str] | None:
    """Return one cycle over the parent edges, or None when acyclic."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {node: WHITE for node in nodes}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        color[node] = GRAY
        stack.append(node)
        for parent in parents.get(node, ()):
            if color[parent] == GRAY:
                return stack[stack.index(parent):] + [parent]
            if color[parent] == WHITE:
                cycle = visit(parent)
                if cycle is not None:
                    return cycle
        stack.pop()
        color[node] = BLACK
        return None

    for node in sorted(nodes):
        if color[node] == WHITE:
            cycle = visit(node)
            if cycle is not None:
                return cycle
    return None


def load_topic_ontology(
    parents_path: str | Path, entity_topics_path: str | Path
) -> TopicOntology:
    """Load the ontology from the parent-edge file and entity-topic file.

    Parent-edge lines are either ``topic <TAB> parent_topic`` or a bare
    ``topic`` that declares a node without parents (roots, isolated topics).
    """
    parents_path = Path(parents_path)
    entity_topics_path = Path(entity_topics_path)

    nodes: set[str] = set()
    parents: dict[str, list[str]] = {}
    for lineno, fields in _records(parents_path):
        if len(fields) == 1:
            topic = fields[0]
            if not topic:
                _fail(parents_path, lineno, "empty topic id")
            nodes.add(topic)
            continue
        if len(fields) != 2:
            _fail(parents_path, lineno, f"expected 1 or 2 fields, got {len(fields)}")
        child, parent = fields
        if not child or not parent:
            _fail(parents_path, lineno, "empty topic id")
        if child == parent:
            _fail(parents_path, lineno, f"topic {child!r} cannot be its own parent")
        nodes.update((child, parent))
        edges = parents.setdefault(child, [])
        if parent in edges:
            _fail(parents_path, lineno, f"duplicate edge {child!r} -> {parent!r}")
        edges.append(parent)

    frozen_nodes = frozenset(nodes)
    frozen_parents = {c: tuple(ps) for c, ps in parents.items()}
    cycle = _find_cycle(frozen_parents, frozen_nodes)
    if cycle is not None:
        raise DictionaryError(
            f"{parents_path}: cyclic topic ontology: {' -> '.join(cycle)}"
        )

    entity_topics: dict[EntityId, set[str]] = {}
    for lineno, fields in _records(entity_topics_path):
        if len(fields) != 2:
            _fail(entity_topics_path, lineno, f"expected 2 fields, got {len(fields)}")
        entity_raw, topic = fields
        try:
            entity = parse_entity_id(entity_raw)
        except DictionaryError as exc:
            _fail(entity_topics_path, lineno, str(exc))
        if entity.is_sentinel():
            _fail(entity_topics_path, lineno, "sentinel entities carry no topics")
        if topic not in frozen_nodes:
            _fail(entity_topics_path, lineno, f"unknown topic id: {topic!r}")
        entity_topics.setdefault(entity, set()).add(topic)

    return TopicOntology(
        nodes=frozen_nodes,
        parents=frozen_parents,
        entity_topics={e: frozenset(ts) for e, ts in entity_topics.items()},
    )


# ---------------------------------------------------------------------------
# The loaded set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DictionaryPaths:
    priors: Path
    cooccurrence: Path
    importance: Path
    topic_parents: Path
    entity_topics: Path


@dataclass
class DictionarySet:
    """All five dictionaries, loaded and validated, shareable across threads."""

    priors: PriorDict
    cooccurrence: CooccurDict
    importance: ImportanceDict
    ontology: TopicOntology

    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.priors))

    def lookup_candidates(
        self, surface: str, language: str
    ) -> tuple[tuple[EntityId, float], ...]:
        """Candidates for a surface form, best prior first; () when unknown."""
        table = self.priors.get(language)
        if table is None:
            return ()
        return table.get(surface_key(surface), ())

    def cooccur_count(self, a: EntityId, b: EntityId) -> int:
        return self.cooccurrence.get(a, {}).get(b, 0)

    def stats(self) -> dict[str, int | list[str]]:
        surfaces = sum(len(table) for table in self.priors.values())
        entities = {
            entity
            for table in self.priors.values()
            for cands in table.values()
            for entity, _ in cands
            if not entity.is_sentinel()
        }
        entities.update(self.importance)
        entities.update(self.cooccurrence)
        pairs = sum(len(ns) for ns in self.cooccurrence.values())
        return {
            "languages": sorted(self.priors),
            "surface_forms": surfaces,
            "entities": len(entities),
            "cooccurrence_pairs": pairs,
            "topics": len(self.ontology.nodes),
        }


def load_dictionaries(
    paths: DictionaryPaths,
    *,
    cooccur_top_k: int = 30,
    cooccur_min_count: int = 10,
) -> DictionarySet:
    """Load and validate all five dictionaries from their files."""
    return DictionarySet(
        priors=load_priors(paths.priors),
        cooccurrence=load_cooccurrence(
            paths.cooccurrence, top_k=cooccur_top_k, min_count=cooccur_min_count
        ),
        importance=load_importance(paths.importance),
        ontology=load_topic_ontology(paths.topic_parents, paths.entity_topics),
    )
