"""The two-pass disambiguation algorithm and the annotation engine.

Pass 1 resolves easy mentions straight from the priors: a lone candidate, a
two-way choice against a sentinel that clears the first threshold, or a
dominant prior among three or more candidates.  Pass 2 scores every candidate
of the remaining hard mentions with the classifier pair, using the easy
entities resolved in pass 1 as context, then picks a winner with a margin
rule that keeps sentinels from narrowly beating real entities.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .classifiers import DecisionTreeModel, LogisticRegressionModel, dt_predict, lr_score
from .features import DocumentContext, EntityContext, compute_feature_vector
from .kb import DictionarySet, EntityId, parse_entity_id
from .preprocess import (
    LanguageDetector,
    Mention,
    Normalized,
    Token,
    break_sentences,
    default_abbreviations,
    extract_mentions,
    normalize,
    tokenize,
)


class EngineError(ValueError):
    pass


class UnsupportedLanguageError(EngineError):
    def __init__(self, language: str):
        super().__init__(f"unsupported language: {language}")
        self.language = language


@dataclass(frozen=True)
class Hyperparameters:
    """Thresholds of the two-pass algorithm.

    easy_nil_threshold  -- minimum prior to resolve a two-candidate mention
                           against its sentinel alternative in pass 1.
    easy_prior_threshold -- minimum top prior to resolve a mention with three
                           or more candidates in pass 1.
    nil_margin          -- score margin a winning sentinel must hold over the
                           runner-up in pass 2, otherwise the runner-up wins.
    window              -- maximum number of easy entities in the context
                           window around a hard mention.
    """

    easy_nil_threshold: float = 0.75
    easy_prior_threshold: float = 0.9
    nil_margin: float = 0.5
    window: int = 400

    def __post_init__(self) -> None:
        for name in ("easy_nil_threshold", "easy_prior_threshold", "nil_margin"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise EngineError(f"{name} = {value} outside [0, 1]")
        if self.window < 1:
            raise EngineError("window must be at least 1")


#: Names accepted in config files and sweep grids for each field.
HYPERPARAMETER_ALIASES = {
    "lambda1": "easy_nil_threshold",
    "lambda2": "easy_prior_threshold",
    "lambda3": "nil_margin",
    "window": "window",
    "easy_nil_threshold": "easy_nil_threshold",
    "easy_prior_threshold": "easy_prior_threshold",
    "nil_margin": "nil_margin",
}

#: Canonical wire spelling used in sweep tables and config fragments.
HYPERPARAMETER_WIRE_NAMES = {
    "easy_nil_threshold": "lambda1",
    "easy_prior_threshold": "lambda2",
    "nil_margin": "lambda3",
    "window": "window",
}


@dataclass
class CandidateResult:
    entity: EntityId
    prior: float
    label: bool | None = None
    score: float | None = None


@dataclass
class MentionResult:
    """One mention's outcome: the chosen entity, which pass resolved it, and
    the per-candidate labels/scores behind the choice."""

    mention: Mention
    entity: EntityId
    score: float
    resolved_pass: int
    candidates: list[CandidateResult]


@dataclass
class ModelPair:
    tree: DecisionTreeModel
    scorer: LogisticRegressionModel


# ---------------------------------------------------------------------------
# Pass 1
# ---------------------------------------------------------------------------

def first_pass(
    mentions: Sequence[Mention], hp: Hyperparameters
) -> tuple[list[MentionResult], list[Mention]]:
    """Resolve the easy mentions; everything else goes to the hard list."""
    easy: list[MentionResult] = []
    hard: list[Mention] = []
    for mention in mentions:
        candidates = mention.candidates
        if not candidates:
            raise EngineError(f"mention {mention.surface!r} has no candidates")
        chosen: tuple[EntityId, float] | None = None
        if len(candidates) == 1:
            chosen = candidates[0]
        elif len(candidates) == 2:
            sentinels = [c for c in candidates if c[0].is_sentinel()]
            if len(sentinels) == 1:
                other = next(c for c in candidates if not c[0].is_sentinel())
                if other[1] > hp.easy_nil_threshold:
                    chosen = other
        elif candidates[0][1] > hp.easy_prior_threshold:
            chosen = candidates[0]  # candidates are stored best prior first
        if chosen is None:
            hard.append(mention)
        else:
            easy.append(
                MentionResult(
                    mention=mention,
                    entity=chosen[0],
                    score=chosen[1],
                    resolved_pass=1,
                    candidates=[CandidateResult(e, p) for e, p in candidates],
                )
            )
    return easy, hard


# ---------------------------------------------------------------------------
# Pass 2
# ---------------------------------------------------------------------------

def build_entity_context(
    mention: Mention,
    candidate_index: int,
    document: DocumentContext,
    window: int,
    exclude_position: int | None = None,
) -> EntityContext:
    """Entity context for one candidate: the nearest easy entities by token
    distance, earlier positions winning ties."""
    return EntityContext(
        mention_position=mention.token_start,
        candidate_index=candidate_index,
        window=document.window(
            mention.token_start, window, exclude_position=exclude_position
        ),
        document=document,
    )


def final_disambiguation(
    candidates: Sequence[CandidateResult], hp: Hyperparameters
) -> EntityId:
    """Pick the winner from labeled, scored candidates.

    The pool is the True-labeled candidates when any exist, otherwise all of
    them.  The best-scoring pool member wins, except that a sentinel must
    beat the next pool member by at least the margin; the walk repeats until
    a non-sentinel wins or the margin holds.
    """
    if not candidates:
        raise EngineError("no candidates to disambiguate")
    for c in candidates:
        if c.label is None or c.score is None:
            raise EngineError(f"candidate {c.entity} is missing a label or score")
    pool = [c for c in candidates if c.label]
    if not pool:
        pool = list(candidates)
    pool.sort(key=lambda c: (-c.score, c.entity.value))
    i = 0
    while (
        pool[i].entity.is_sentinel()
        and i + 1 < len(pool)
        and pool[i].score - pool[i + 1].score < hp.nil_margin
    ):
        i += 1
    return pool[i].entity


def second_pass(
    hard_mentions: Sequence[Mention],
    document: DocumentContext,
    models: ModelPair,
    dicts: DictionarySet,
    hp: Hyperparameters,
) -> list[MentionResult]:
    """Label and score every candidate of every hard mention, then apply the
    final disambiguation rule."""
    results = []
    for mention in hard_mentions:
        scored: list[CandidateResult] = []
        for index, (entity, prior) in enumerate(mention.candidates):
            context = build_entity_context(mention, index, document, hp.window)
            vector = compute_feature_vector(mention, entity, context, dicts)
            scored.append(
                CandidateResult(
                    entity=entity,
                    prior=prior,
                    label=dt_predict(models.tree, vector),
                    score=lr_score(models.scorer, vector),
                )
            )
        winner = final_disambiguation(scored, hp)
        score = next(c.score for c in scored if c.entity == winner)
        results.append(
            MentionResult(
                mention=mention,
                entity=winner,
                score=score,
                resolved_pass=2,
                candidates=scored,
            )
        )
    return results


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

@dataclass
class Preprocessed:
    language: str
    confidence: float
    normalized: Normalized
    sentences: list[tuple[int, int]]
    tokens: list[Token]
    mentions: list[Mention]


@dataclass
class DocumentAnnotation:
    text: str
    language: str
    results: list[MentionResult]
    normalized: Normalized

    def to_record(self) -> dict:
        mentions = []
        for r in self.results:
            start, end = self.normalized.original_span(
                r.mention.char_start, r.mention.char_end
            )
            mentions.append(
                {
                    "surface": self.text[start:end],
                    "char_start": start,
                    "char_end": end,
                    "entity": str(r.entity),
                    "score": r.score,
                    "pass": r.resolved_pass,
                    "candidates": [
                        {
                            "entity": str(c.entity),
                            "prior": c.prior,
                            "label": c.label,
                            "score": c.score,
                        }
                        for c in r.candidates
                    ],
                }
            )
        return {"language": self.language, "text": self.text, "mentions": mentions}


def record_to_json(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":"))


class Engine:
    """Shared, immutable annotation engine: dictionaries, models, thresholds.

    ``annotate`` is a pure function of its inputs, so one engine can serve
    any number of threads.
    """

    def __init__(
        self,
        dicts: DictionarySet,
        models: ModelPair | None = None,
        hyperparameters: Hyperparameters | None = None,
        detector: LanguageDetector | None = None,
        abbreviations: dict[str, frozenset[str]] | None = None,
    ):
        self.dicts = dicts
        self.models = models
        self.hyperparameters = hyperparameters or Hyperparameters()
        self.detector = detector
        self._abbreviations = dict(abbreviations or {})

    def abbreviations_for(self, language: str) -> frozenset[str]:
        if language not in self._abbreviations:
            self._abbreviations[language] = default_abbreviations(language)
        return self._abbreviations[language]

    def preprocess(self, text: str, language: str | None = None) -> Preprocessed:
        if not text.strip():
            return Preprocessed(
                language=language or "und",
                confidence=1.0,
                normalized=normalize(text, language or "und"),
                sentences=[],
                tokens=[],
                mentions=[],
            )
        if language is not None:
            confidence = 1.0
        else:
            if self.detector is None:
                raise EngineError(
                    "no language given and no language profiles loaded"
                )
            language, confidence = self.detector.detect(text)
        if language not in self.dicts.priors:
            raise UnsupportedLanguageError(language)
        normalized = normalize(text, language)
        sentences = break_sentences(
            normalized.text, language, self.abbreviations_for(language)
        )
        tokens: list[Token] = []
        mentions: list[Mention] = []
        for sentence_index, span in enumerate(sentences):
            sentence_tokens = tokenize(normalized.text, span, sentence_index)
            mentions.extend(
                extract_mentions(
                    sentence_tokens,
                    self.dicts.priors,
                    language,
                    token_offset=len(tokens),
                )
            )
            tokens.extend(sentence_tokens)
        return Preprocessed(
            language=language,
            confidence=confidence,
            normalized=normalized,
            sentences=sentences,
            tokens=tokens,
            mentions=mentions,
        )

    def disambiguate(
        self, pre: Preprocessed, text: str, hp: Hyperparameters | None = None
    ) -> DocumentAnnotation:
        hp = hp or self.hyperparameters
        document = DocumentContext()
        easy, hard = first_pass(pre.mentions, hp)
        for result in easy:
            if not result.entity.is_sentinel():
                document.add(result.mention.token_start, result.entity)
        if hard:
            if self.models is None:
                raise EngineError(
                    "hard mentions present but no classifier models are loaded"
                )
            results = easy + second_pass(hard, document, self.models, self.dicts, hp)
        else:
            results = easy
        results.sort(key=lambda r: r.mention.token_start)
        return DocumentAnnotation(
            text=text,
            language=pre.language,
            results=results,
            normalized=pre.normalized,
        )

    def annotate(
        self,
        text: str,
        language: str | None = None,
        hp: Hyperparameters | None = None,
    ) -> DocumentAnnotation:
        pre = self.preprocess(text, language)
        return self.disambiguate(pre, text, hp)


def annotate_bulk(
    engine: Engine,
    texts: Iterable[str],
    workers: int = 1,
    language: str | None = None,
    hp: Hyperparameters | None = None,
) -> list[dict]:
    """Annotate documents in parallel, preserving input order.

    Per-document failures become ``{"error": ...}`` records instead of
    aborting the batch.
    """

    def one(text: str) -> dict:
        try:
            return engine.annotate(text, language=language, hp=hp).to_record()
        except EngineError as exc:
            return {"error": str(exc), "text": text}

    if workers <= 1:
        return [one(text) for text in texts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, texts))
