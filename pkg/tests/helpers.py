"""Shared fixture builders for the test suite."""

from __future__ import annotations

import json
import random
from pathlib import Path

from entlink.corpus import AnnotatedDocument, Annotation
from entlink.evaluation import GoldDocument, GoldMention
from entlink.kb import EntityId, parse_entity_id

FIXTURES = Path(__file__).parent / "fixtures"
DEMO_DIR = FIXTURES / "demo"

DEMO_SENTENCE = (
    "Google CEO Eric Schmidt said that the competition between Apple and Google "
    "and iOS vs. Android is 'the defining fight of the tech industry.'"
)

#: Expected resolution per distinct surface (the walkthrough sentence mentions
#: "Google" twice; both occurrences must agree).
DEMO_EXPECTED = {
    "Google": "Google_Inc",
    "CEO": "Chief_Executive",
    "Eric Schmidt": "Eric_Schmidt",
    "Apple": "Apple_Inc",
    "iOS": "iOS",
    "Android": "Android_(OS)",
    "tech industry": "Technology",
}

DEMO_FIRST_PASS = {"Eric Schmidt", "iOS", "tech industry"}


def gold_doc(text: str, pairs: list[tuple[str, str]], language: str = "en") -> GoldDocument:
    """Build a gold document by locating each surface occurrence in order."""
    mentions = []
    cursor: dict[str, int] = {}
    for surface, entity in pairs:
        start = text.index(surface, cursor.get(surface, 0))
        cursor[surface] = start + len(surface)
        mentions.append(
            GoldMention(start, start + len(surface), parse_entity_id(entity))
        )
    return GoldDocument(text=text, mentions=mentions, language=language)


def write_gold_file(docs: list[GoldDocument], path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
    return path


def demo_training_docs() -> list[GoldDocument]:
    return [
        gold_doc("Eric Schmidt praised Google at the annual conference.",
                 [("Eric Schmidt", "Eric_Schmidt"), ("Google", "Google_Inc")]),
        gold_doc("The tech industry watched as Google expanded.",
                 [("tech industry", "Technology"), ("Google", "Google_Inc")]),
        gold_doc("Eric Schmidt said Google and the tech industry need rules.",
                 [("Eric Schmidt", "Eric_Schmidt"), ("Google", "Google_Inc"),
                  ("tech industry", "Technology")]),
        gold_doc("iOS updates arrived while Android fans waited.",
                 [("iOS", "iOS"), ("Android", "Android_(OS)")]),
        gold_doc("Eric Schmidt compared iOS with Android.",
                 [("Eric Schmidt", "Eric_Schmidt"), ("iOS", "iOS"),
                  ("Android", "Android_(OS)")]),
        gold_doc("Apple shipped new iOS builds to the tech industry.",
                 [("Apple", "Apple_Inc"), ("iOS", "iOS"),
                  ("tech industry", "Technology")]),
        gold_doc("Eric Schmidt credited Apple for the tech industry boom.",
                 [("Eric Schmidt", "Eric_Schmidt"), ("Apple", "Apple_Inc"),
                  ("tech industry", "Technology")]),
        gold_doc("The CEO praised the tech industry.",
                 [("CEO", "Chief_Executive"), ("tech industry", "Technology")]),
        gold_doc("Eric Schmidt served as CEO.",
                 [("Eric Schmidt", "Eric_Schmidt"), ("CEO", "Chief_Executive")]),
        gold_doc("Apple and Android rivals joined the tech industry panel with Eric Schmidt.",
                 [("Apple", "Apple_Inc"), ("Android", "Android_(OS)"),
                  ("tech industry", "Technology"), ("Eric Schmidt", "Eric_Schmidt")]),
    ]


# ---------------------------------------------------------------------------
# Sweep fixture: an ambiguous surface whose top prior misleads the first pass
# ---------------------------------------------------------------------------

SWEEP_PRIORS = """\
en\tjava\t__NIL__\t0.05
en\tjava\tJava_(programming)\t0.55
en\tjava\tJava_(island)\t0.4
en\tIndonesia\tIndonesia\t1.0
en\tBali\tBali\t1.0
en\tsoftware\tSoftware\t1.0
en\tcompilers\tCompilers\t1.0
"""

SWEEP_COOCCURRENCE = """\
Java_(island)\tIndonesia\t40
Java_(island)\tBali\t30
Indonesia\tJava_(island)\t40
Bali\tJava_(island)\t30
Java_(programming)\tSoftware\t35
Java_(programming)\tCompilers\t25
Software\tJava_(programming)\t35
Compilers\tJava_(programming)\t25
"""

SWEEP_IMPORTANCE = """\
Java_(island)\t0.5
Java_(programming)\t0.55
Indonesia\t0.6
Bali\t0.4
Software\t0.5
Compilers\t0.35
"""

SWEEP_TOPIC_PARENTS = """\
interests
technology\tinterests
lifestyle\tinterests
travel\tlifestyle
programming\ttechnology
"""

SWEEP_ENTITY_TOPICS = """\
Java_(island)\ttravel
Indonesia\ttravel
Bali\ttravel
Java_(programming)\tprogramming
Software\tprogramming
Compilers\tprogramming
"""


def write_sweep_dictionaries(directory: Path) -> dict[str, Path]:
    directory.mkdir(parents=True, exist_ok=True)
    contents = {
        "priors": SWEEP_PRIORS,
        "cooccurrence": SWEEP_COOCCURRENCE,
        "importance": SWEEP_IMPORTANCE,
        "topic_parents": SWEEP_TOPIC_PARENTS,
        "entity_topics": SWEEP_ENTITY_TOPICS,
    }
    paths = {}
    for name, body in contents.items():
        path = directory / f"{name}.tsv"
        path.write_text(body, encoding="utf-8")
        paths[name] = path
    return paths


def sweep_training_docs() -> list[GoldDocument]:
    return [
        gold_doc("Indonesia travellers adore java and Bali beaches.",
                 [("Indonesia", "Indonesia"), ("java", "Java_(island)"),
                  ("Bali", "Bali")]),
        gold_doc("Bali and Indonesia offer java tours.",
                 [("Bali", "Bali"), ("Indonesia", "Indonesia"),
                  ("java", "Java_(island)")]),
        gold_doc("Software engineers write java for compilers.",
                 [("Software", "Software"), ("java", "Java_(programming)"),
                  ("compilers", "Compilers")]),
        gold_doc("Compilers turn java into fast software.",
                 [("Compilers", "Compilers"), ("java", "Java_(programming)"),
                  ("software", "Software")]),
    ]


def sweep_validation_docs() -> list[GoldDocument]:
    return [
        gold_doc("Indonesia and Bali surround java.",
                 [("Indonesia", "Indonesia"), ("Bali", "Bali"),
                  ("java", "Java_(island)")]),
        gold_doc("Travellers visit Bali before java.",
                 [("Bali", "Bali"), ("java", "Java_(island)")]),
    ]


# ---------------------------------------------------------------------------
# Random annotated corpora for the builder oracle tests
# ---------------------------------------------------------------------------

def random_corpus(
    rng: random.Random,
    n_docs: int = 3,
    tokens_range: tuple[int, int] = (40, 120),
    n_entities: int = 8,
    languages: tuple[str, ...] = ("en", "de"),
    unlinked_rate: float = 0.15,
) -> list[AnnotatedDocument]:
    entities = [EntityId(f"E{i}") for i in range(n_entities)]
    vocabulary = [f"w{i}" for i in range(25)]
    docs = []
    for _ in range(n_docs):
        n_tokens = rng.randint(*tokens_range)
        tokens = [rng.choice(vocabulary) for _ in range(n_tokens)]
        annotations = []
        position = 0
        while position < n_tokens:
            if rng.random() < 0.3:
                length = min(rng.randint(1, 2), n_tokens - position)
                entity = None if rng.random() < unlinked_rate else rng.choice(entities)
                annotations.append(
                    Annotation(start=position, end=position + length, entity=entity)
                )
                position += length
            else:
                position += 1
        docs.append(
            AnnotatedDocument(
                language=rng.choice(languages),
                tokens=tokens,
                annotations=annotations,
            )
        )
    return docs
