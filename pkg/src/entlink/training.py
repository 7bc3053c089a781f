"""Turning a gold-annotated corpus into classifier training data.

Every candidate of every extracted mention becomes one example, labeled True
exactly when it matches the gold entity aligned on the mention's character
span.  Extracted mentions with no gold counterpart count as gold NIL, which
is where the classifiers learn to keep sentinels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .classifiers import LabeledExample
from .core import Engine, EngineError, Hyperparameters, first_pass
from .evaluation import GoldDocument
from .features import DocumentContext, EntityContext, compute_feature_vector
from .kb import NIL


@dataclass
class TrainingSet:
    examples: list[LabeledExample]
    mentions: int
    hard_mentions: int
    documents: int


def collect_training_examples(
    engine: Engine,
    gold_docs: Sequence[GoldDocument],
    hp: Hyperparameters | None = None,
) -> TrainingSet:
    """Extract mentions from each gold document and label their candidates.

    Easy mentions contribute examples too, with their own entity left out of
    the context window so the features match what a hard mention would see.
    """
    hp = hp or engine.hyperparameters
    examples: list[LabeledExample] = []
    total_mentions = 0
    total_hard = 0
    for doc in gold_docs:
        pre = engine.preprocess(doc.text, doc.language)
        gold_by_span = {(m.char_start, m.char_end): m.entity for m in doc.mentions}
        easy, hard = first_pass(pre.mentions, hp)
        total_mentions += len(pre.mentions)
        total_hard += len(hard)

        document = DocumentContext()
        for result in easy:
            if not result.entity.is_sentinel():
                document.add(result.mention.token_start, result.entity)

        easy_positions = {r.mention.token_start for r in easy}
        for mention in pre.mentions:
            span = pre.normalized.original_span(mention.char_start, mention.char_end)
            gold_entity = gold_by_span.get(span, NIL)
            exclude = (
                mention.token_start
                if mention.token_start in easy_positions
                else None
            )
            window = document.window(
                mention.token_start, hp.window, exclude_position=exclude
            )
            for index, (entity, _prior) in enumerate(mention.candidates):
                context = EntityContext(
                    mention_position=mention.token_start,
                    candidate_index=index,
                    window=window,
                    document=document,
                )
                vector = compute_feature_vector(mention, entity, context, engine.dicts)
                examples.append(
                    LabeledExample(features=vector, label=entity == gold_entity)
                )
    if total_hard == 0:
        raise EngineError("nothing to train on: the corpus has no hard mentions")
    return TrainingSet(
        examples=examples,
        mentions=total_mentions,
        hard_mentions=total_hard,
        documents=len(gold_docs),
    )
