"""Offline construction of the mention-prior and entity-cooccurrence
dictionaries from a hyperlink-annotated corpus, plus the in-document
densifier that propagates unambiguous annotations.

Corpus files hold one JSON record per line::

    {"language": "en", "tokens": [...],
     "annotations": [{"start": 0, "end": 2, "entity": "Some_Id" | null}]}

``start``/``end`` are token indices (end exclusive).  A null entity marks an
occurrence that is a mention but links to nothing; those accrue to NIL when
priors are counted.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .kb import NIL, CooccurDict, EntityId, parse_entity_id, surface_key


class CorpusError(ValueError):
    """A corpus record is malformed or violates the span invariants."""


@dataclass(frozen=True, slots=True)
class Annotation:
    start: int
    end: int
    entity: EntityId | None


@dataclass
class AnnotatedDocument:
    language: str
    tokens: list[str]
    annotations: list[Annotation]

    def __post_init__(self) -> None:
        previous_end = 0
        for ann in sorted(self.annotations, key=lambda a: a.start):
            if not 0 <= ann.start < ann.end <= len(self.tokens):
                raise CorpusError(
                    f"annotation span [{ann.start}, {ann.end}) out of bounds "
                    f"for a {len(self.tokens)}-token document"
                )
            if ann.start < previous_end:
                raise CorpusError(
                    f"annotation spans overlap at token {ann.start}"
                )
            previous_end = ann.end
        self.annotations = sorted(self.annotations, key=lambda a: a.start)

    def span_surface(self, start: int, end: int) -> str:
        return surface_key(" ".join(self.tokens[start:end]))


def document_from_record(record: dict) -> AnnotatedDocument:
    try:
        annotations = [
            Annotation(
                start=int(a["start"]),
                end=int(a["end"]),
                entity=None if a.get("entity") is None else parse_entity_id(a["entity"]),
            )
            for a in record.get("annotations", [])
        ]
        return AnnotatedDocument(
            language=record["language"],
            tokens=list(record["tokens"]),
            annotations=annotations,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"malformed corpus record: {exc}") from exc


def document_to_record(doc: AnnotatedDocument) -> dict:
    return {
        "language": doc.language,
        "tokens": list(doc.tokens),
        "annotations": [
            {
                "start": a.start,
                "end": a.end,
                "entity": None if a.entity is None else str(a.entity),
            }
            for a in doc.annotations
        ],
    }


def read_corpus(path: str | Path) -> list[AnnotatedDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                docs.append(document_from_record(record))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return docs


def write_corpus(docs: Iterable[AnnotatedDocument], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_record(doc), ensure_ascii=False,
                                sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Prior counting
# ---------------------------------------------------------------------------

def build_mention_entity_priors(
    corpus: list[AnnotatedDocument], language: str
) -> dict[str, tuple[tuple[EntityId, float], ...]]:
    """count(surface -> entity) / count(surface) over one language's corpus.

    Unlinked occurrences accrue to NIL, so every surface's priors sum to 1
    by construction.
    """
    if not corpus:
        raise CorpusError("empty corpus")
    totals: Counter[str] = Counter()
    linked: dict[str, Counter[EntityId]] = defaultdict(Counter)
    for doc in corpus:
        if doc.language != language:
            raise CorpusError(
                f"document language {doc.language!r} does not match {language!r}"
            )
        for ann in doc.annotations:
            key = doc.span_surface(ann.start, ann.end)
            if not key:
                continue
            entity = ann.entity if ann.entity is not None else NIL
            totals[key] += 1
            linked[key][entity] += 1
    priors: dict[str, tuple[tuple[EntityId, float], ...]] = {}
    for key, total in totals.items():
        cands = [
            (entity, count / total) for entity, count in linked[key].items()
        ]
        cands.sort(key=lambda item: (-item[1], item[0].value))
        priors[key] = tuple(cands)
    return priors


# ---------------------------------------------------------------------------
# Cooccurrence counting
# ---------------------------------------------------------------------------

def _entity_occurrences(doc: AnnotatedDocument) -> list[tuple[int, int, EntityId]]:
    return [
        (a.start, a.end, a.entity)
        for a in doc.annotations
        if a.entity is not None and not a.entity.is_sentinel()
    ]


def build_entity_cooccurrence(
    corpus: list[AnnotatedDocument],
    window_tokens: int = 50,
    top_k: int = 30,
    min_count: int = 10,
) -> CooccurDict:
    """Count entity pairs that fit together inside a sliding token window.

    A pair of occurrences is counted once (per direction) when some window of
    ``window_tokens`` consecutive tokens contains both spans entirely, which
    is exactly when their union span is at most ``window_tokens`` long.
    Counts accumulate across all languages; afterwards each entity keeps only
    its ``top_k`` strongest neighbors with at least ``min_count``.
    """
    if not corpus:
        raise CorpusError("empty corpus")
    counts: dict[EntityId, Counter[EntityId]] = defaultdict(Counter)
    for doc in corpus:
        occurrences = _entity_occurrences(doc)
        for i, (start_i, end_i, entity_i) in enumerate(occurrences):
            for j in range(i + 1, len(occurrences)):
                start_j, end_j, entity_j = occurrences[j]
                if start_j - start_i >= window_tokens:
                    break  # occurrences are sorted by start
                if max(end_i, end_j) - start_i > window_tokens:
                    continue
                if entity_i == entity_j:
                    continue
                counts[entity_i][entity_j] += 1
                counts[entity_j][entity_i] += 1

    pruned: CooccurDict = {}
    for entity, neighbors in counts.items():
        qualifying = [
            (neighbor, count)
            for neighbor, count in neighbors.items()
            if count >= min_count
        ]
        qualifying.sort(key=lambda item: (-item[1], item[0].value))
        if qualifying:
            pruned[entity] = dict(qualifying[:top_k])
    return pruned


def brute_force_cooccurrence(
    corpus: list[AnnotatedDocument], window_tokens: int = 50
) -> dict[tuple[EntityId, EntityId], int]:
    """Unpruned reference count: enumerate every window position explicitly.

    Quadratic in window content and linear in text length; only suitable for
    small corpora.  Kept in the library so the fast path can be audited.
    """
    seen_pairs: dict[tuple[EntityId, EntityId], set[tuple[int, int, int]]] = defaultdict(set)
    for doc_index, doc in enumerate(corpus):
        occurrences = _entity_occurrences(doc)
        n = len(doc.tokens)
        for window_start in range(max(1, n - window_tokens + 1)):
            window_end = window_start + window_tokens
            inside = [
                (idx, occ)
                for idx, occ in enumerate(occurrences)
                if occ[0] >= window_start and occ[1] <= window_end
            ]
            for a in range(len(inside)):
                for b in range(a + 1, len(inside)):
                    idx_a, occ_a = inside[a]
                    idx_b, occ_b = inside[b]
                    if occ_a[2] == occ_b[2]:
                        continue
                    seen_pairs[(occ_a[2], occ_b[2])].add((doc_index, idx_a, idx_b))
    counts: dict[tuple[EntityId, EntityId], int] = defaultdict(int)
    for (a, b), occurrence_pairs in seen_pairs.items():
        counts[(a, b)] += len(occurrence_pairs)
        counts[(b, a)] += len(occurrence_pairs)
    return dict(counts)


# ---------------------------------------------------------------------------
# Densification
# ---------------------------------------------------------------------------

def densify(corpus: list[AnnotatedDocument]) -> list[AnnotatedDocument]:
    """Propagate unambiguous in-document annotations to matching bare spans.

    For each document, a surface whose linked annotations all point at one
    entity is propagated to every unannotated token run with the same length
    and normalized surface.  Existing annotations are never touched; longer
    surfaces win when freshly propagated spans would collide.
    """
    result = []
    for doc in corpus:
        by_surface: dict[tuple[int, str], set[EntityId]] = defaultdict(set)
        for ann in doc.annotations:
            if ann.entity is None or ann.entity.is_sentinel():
                continue
            key = doc.span_surface(ann.start, ann.end)
            if key:
                by_surface[(ann.end - ann.start, key)].add(ann.entity)
        unambiguous = {
            span_key: next(iter(entities))
            for span_key, entities in by_surface.items()
            if len(entities) == 1
        }
        if not unambiguous:
            result.append(doc)
            continue

        occupied = [False] * len(doc.tokens)
        for ann in doc.annotations:
            for t in range(ann.start, ann.end):
                occupied[t] = True

        added: list[Annotation] = []
        for (length, key), entity in sorted(
            unambiguous.items(), key=lambda item: (-item[0][0], item[0][1])
        ):
            for start in range(len(doc.tokens) - length + 1):
                end = start + length
                if any(occupied[start:end]):
                    continue
                if doc.span_surface(start, end) != key:
                    continue
                added.append(Annotation(start=start, end=end, entity=entity))
                for t in range(start, end):
                    occupied[t] = True
        if added:
            result.append(
                replace(doc, annotations=sorted(
                    doc.annotations + added, key=lambda a: a.start
                ))
            )
        else:
            result.append(doc)
    return result


# ---------------------------------------------------------------------------
# Dictionary file writers (inverse of the kb loaders)
# ---------------------------------------------------------------------------

def write_priors_file(
    priors: dict[str, dict[str, tuple[tuple[EntityId, float], ...]]],
    path: str | Path,
) -> None:
    lines = []
    for language in sorted(priors):
        for key in sorted(priors[language]):
            for entity, prior in priors[language][key]:
                lines.append(f"{language}\t{key}\t{entity}\t{prior!r}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def write_cooccurrence_file(cooccurrence: CooccurDict, path: str | Path) -> None:
    lines = []
    for entity in sorted(cooccurrence, key=lambda e: e.value):
        neighbors = cooccurrence[entity]
        for neighbor in sorted(neighbors, key=lambda e: (-neighbors[e], e.value)):
            lines.append(f"{entity}\t{neighbor}\t{neighbors[neighbor]}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
