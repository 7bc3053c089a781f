import random

import pytest

import helpers
from entlink.core import (
    CandidateResult,
    EngineError,
    Hyperparameters,
    UnsupportedLanguageError,
    annotate_bulk,
    final_disambiguation,
    first_pass,
    record_to_json,
)
from entlink.kb import MISC, NIL, EntityId
from entlink.preprocess import Mention


def mention(*candidates, surface="m"):
    ordered = tuple(
        sorted(candidates, key=lambda c: (-c[1], c[0].value))
    )
    return Mention(
        surface=surface,
        token_start=0,
        token_len=1,
        sentence=0,
        char_start=0,
        char_end=len(surface),
        candidates=ordered,
    )


A = EntityId("Alpha")
B = EntityId("Beta")
C = EntityId("Gamma")
HP = Hyperparameters()


class TestFirstPass:
    def test_single_candidate_resolves(self):
        easy, hard = first_pass([mention((A, 1.0))], HP)
        assert hard == [] and easy[0].entity == A
        assert easy[0].resolved_pass == 1

    def test_single_nil_candidate_resolves_to_nil(self):
        easy, hard = first_pass([mention((NIL, 1.0))], HP)
        assert easy[0].entity is NIL

    def test_two_with_sentinel_above_threshold(self):
        easy, hard = first_pass([mention((NIL, 0.2), (A, 0.8))], HP)
        assert easy[0].entity == A and easy[0].score == 0.8

    def test_two_with_sentinel_below_threshold_goes_hard(self):
        easy, hard = first_pass([mention((NIL, 0.3), (A, 0.7))], HP)
        assert easy == [] and len(hard) == 1

    def test_threshold_is_strict(self):
        easy, hard = first_pass([mention((NIL, 0.25), (A, 0.75))], HP)
        assert easy == []

    def test_two_without_sentinel_goes_hard(self):
        easy, hard = first_pass([mention((A, 0.6), (B, 0.4))], HP)
        assert easy == []

    def test_two_sentinels_go_hard(self):
        easy, hard = first_pass([mention((NIL, 0.6), (MISC, 0.4))], HP)
        assert easy == []

    def test_three_with_dominant_prior(self):
        easy, hard = first_pass(
            [mention((A, 0.95), (B, 0.03), (NIL, 0.02))], HP
        )
        assert easy[0].entity == A

    def test_three_without_dominant_prior_goes_hard(self):
        easy, hard = first_pass(
            [mention((A, 0.6), (B, 0.3), (NIL, 0.1))], HP
        )
        assert easy == [] and len(hard) == 1

    def test_empty_candidates_rejected(self):
        with pytest.raises(EngineError):
            first_pass([mention()], HP)

    def test_monotone_in_thresholds(self):
        rng = random.Random(43)
        for _ in range(300):
            n = rng.randint(1, 5)
            weights = [rng.random() + 1e-9 for _ in range(n)]
            total = sum(weights)
            entities = [NIL if i == 0 and rng.random() < 0.5 else EntityId(f"E{i}")
                        for i in range(n)]
            m = mention(*zip(entities, (w / total for w in weights)))
            thresholds = sorted(rng.random() for _ in range(4))
            previous_easy = None
            for t in thresholds:
                hp = Hyperparameters(
                    easy_nil_threshold=t, easy_prior_threshold=t
                )
                easy, hard = first_pass([m], hp)
                is_easy = bool(easy)
                if previous_easy is not None:
                    # Raising thresholds can only move easy -> hard.
                    assert not (is_easy and not previous_easy)
                previous_easy = is_easy


def scored(entity, score, label):
    return CandidateResult(entity=entity, prior=0.0, label=label, score=score)


class TestFinalDisambiguation:
    def test_single_true_wins(self):
        winner = final_disambiguation(
            [scored(A, 0.9, True), scored(B, 0.95, False), scored(NIL, 0.99, False)],
            HP,
        )
        assert winner == A

    def test_multiple_true_highest_score(self):
        winner = final_disambiguation(
            [scored(A, 0.6, True), scored(B, 0.8, True), scored(C, 0.99, False)],
            HP,
        )
        assert winner == B

    def test_none_true_highest_overall(self):
        winner = final_disambiguation(
            [scored(A, 0.3, False), scored(B, 0.5, False)], HP
        )
        assert winner == B

    def test_margin_rule_promotes_runner_up(self):
        winner = final_disambiguation(
            [scored(NIL, 0.70, True), scored(EntityId("Android_(OS)"), 0.55, True)],
            HP,
        )
        assert winner == EntityId("Android_(OS)")

    def test_margin_rule_keeps_clear_nil(self):
        winner = final_disambiguation(
            [scored(NIL, 0.99, False), scored(EntityId("X"), 0.10, False)], HP
        )
        assert winner is NIL

    def test_single_true_nil_stays(self):
        # Margin has no runner-up pool when exactly one candidate is True.
        winner = final_disambiguation(
            [scored(NIL, 0.9, True), scored(A, 0.89, False)], HP
        )
        assert winner is NIL

    def test_misc_treated_like_nil(self):
        winner = final_disambiguation(
            [scored(MISC, 0.7, True), scored(A, 0.45, True)], HP
        )
        assert winner == A

    def test_margin_walk_skips_sentinel_chain(self):
        winner = final_disambiguation(
            [scored(NIL, 0.9, True), scored(MISC, 0.8, True), scored(A, 0.7, True)],
            HP,
        )
        assert winner == A

    def test_unlabeled_candidate_rejected(self):
        with pytest.raises(EngineError):
            final_disambiguation([CandidateResult(A, 0.5)], HP)

    def test_empty_rejected(self):
        with pytest.raises(EngineError):
            final_disambiguation([], HP)

    def test_case_analysis_property(self):
        rng = random.Random(47)
        sentinel_pool = [NIL, MISC]
        for _ in range(1500):
            n = rng.randint(1, 6)
            entities = rng.sample(
                [EntityId(f"E{i}") for i in range(6)] + sentinel_pool, n
            )
            candidates = [
                scored(e, round(rng.random(), 3), rng.random() < 0.4)
                for e in entities
            ]
            margin = rng.choice([0.0, 0.1, 0.5, 0.9])
            hp = Hyperparameters(nil_margin=margin)
            winner = final_disambiguation(candidates, hp)
            true_set = [c for c in candidates if c.label]
            pool = true_set if true_set else candidates
            pool_sorted = sorted(pool, key=lambda c: (-c.score, c.entity.value))
            winner_result = next(c for c in pool_sorted if c.entity == winner)

            # The winner always comes from the candidate set.
            assert winner in {c.entity for c in candidates}
            if len(true_set) == 1:
                assert winner == true_set[0].entity
            if not winner_result.entity.is_sentinel():
                continue
            # A sentinel winner must hold the margin over every non-sentinel
            # pool member, or have none to yield to.
            for other in pool_sorted:
                if not other.entity.is_sentinel():
                    assert winner_result.score - other.score >= margin


class TestAnnotate:
    def test_demo_sentence(self, engine):
        annotation = engine.annotate(helpers.DEMO_SENTENCE)
        resolved = {r.mention.surface: str(r.entity) for r in annotation.results}
        assert resolved == helpers.DEMO_EXPECTED
        first = {
            r.mention.surface for r in annotation.results if r.resolved_pass == 1
        }
        assert first == helpers.DEMO_FIRST_PASS

    def test_chosen_entity_always_a_candidate(self, engine):
        annotation = engine.annotate(helpers.DEMO_SENTENCE)
        for result in annotation.results:
            assert result.entity in {e for e, _ in result.mention.candidates}
            assert result.resolved_pass in (1, 2)

    def test_empty_text(self, engine):
        annotation = engine.annotate("")
        assert annotation.results == []
        assert engine.annotate("   \n\t").results == []

    def test_no_dictionary_hits(self, engine):
        annotation = engine.annotate("nothing matches here at all today")
        assert annotation.results == []

    def test_unsupported_language_names_it(self, engine):
        with pytest.raises(UnsupportedLanguageError, match="ja"):
            engine.annotate("美術館へ行きました。")

    def test_explicit_language_skips_detection(self, engine):
        annotation = engine.annotate("Apple pie recipe", language="en")
        assert annotation.language == "en"
        assert len(annotation.results) == 1

    def test_deterministic(self, engine):
        first = record_to_json(engine.annotate(helpers.DEMO_SENTENCE).to_record())
        second = record_to_json(engine.annotate(helpers.DEMO_SENTENCE).to_record())
        assert first == second

    def test_char_offsets_point_into_original_text(self, engine):
        text = "café — Apple and Google fight; Eric Schmidt watches."
        annotation = engine.annotate(text)
        record = annotation.to_record()
        assert record["mentions"], "expected at least one mention"
        for m in record["mentions"]:
            assert text[m["char_start"]:m["char_end"]] == m["surface"]

    def test_second_pass_empty_window_equals_context_free_oracle(
        self, engine, demo_dicts
    ):
        # No easy mentions: every feature vector must carry zero context
        # features, so scores equal a by-hand computation with zeros.
        from entlink.classifiers import lr_score
        from entlink.features import (
            EntityContext,
            compute_feature_vector,
        )

        text = "Apple and Google and Android"
        annotation = engine.annotate(text)
        assert all(r.resolved_pass == 2 for r in annotation.results)
        for result in annotation.results:
            for candidate in result.candidates:
                vector = compute_feature_vector(
                    result.mention,
                    candidate.entity,
                    EntityContext(0, 0, (), None),
                    demo_dicts,
                )
                assert vector.entity_entity_cooccurr == 0.0
                assert vector.entity_entity_topic_sim == 0.0
                assert candidate.score == lr_score(engine.models.scorer, vector)

    def test_hard_mentions_without_models_rejected(self, demo_dicts, detector):
        from entlink.core import Engine

        bare = Engine(dicts=demo_dicts, detector=detector)
        with pytest.raises(EngineError, match="models"):
            bare.annotate("Apple pie", language="en")

    def test_easy_only_document_needs_no_models(self, demo_dicts, detector):
        from entlink.core import Engine

        bare = Engine(dicts=demo_dicts, detector=detector)
        annotation = bare.annotate("the tech industry rallied", language="en")
        assert [str(r.entity) for r in annotation.results] == ["Technology"]


class TestAnnotateBulk:
    def test_order_preserved_and_workers_agree(self, engine):
        texts = [
            f"Eric Schmidt met Apple number {i} in the tech industry."
            for i in range(40)
        ]
        serial = annotate_bulk(engine, texts, workers=1)
        parallel = annotate_bulk(engine, texts, workers=4)
        assert [record_to_json(r) for r in serial] == [
            record_to_json(r) for r in parallel
        ]

    def test_error_record_for_unsupported_language(self, engine):
        records = annotate_bulk(
            engine,
            [
                "Eric Schmidt said the tech industry would keep growing.",
                "美術館へ行きます。",
            ],
            workers=2,
        )
        assert "error" not in records[0]
        assert "unsupported language" in records[1]["error"]
