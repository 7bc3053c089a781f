from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import helpers
from entlink.cli import main as cli_main
from entlink.config import build_engine, load_config
from entlink.kb import DictionaryPaths, load_dictionaries
from entlink.preprocess import LanguageDetector

LANG_SAMPLES = Path(__file__).parent.parent / "src" / "entlink" / "data" / "lang_samples"


@pytest.fixture(scope="session")
def demo_dict_paths() -> DictionaryPaths:
    d = helpers.DEMO_DIR
    return DictionaryPaths(
        priors=d / "priors.tsv",
        cooccurrence=d / "cooccurrence.tsv",
        importance=d / "importance.tsv",
        topic_parents=d / "topic_parents.tsv",
        entity_topics=d / "entity_topics.tsv",
    )


@pytest.fixture(scope="session")
def demo_dicts(demo_dict_paths):
    return load_dictionaries(demo_dict_paths)


@pytest.fixture(scope="session")
def detector():
    samples = {
        path.stem: path.read_text(encoding="utf-8")
        for path in sorted(LANG_SAMPLES.glob("*.txt"))
    }
    return LanguageDetector.train(samples)


@pytest.fixture(scope="session")
def workspace(tmp_path_factory, detector):
    """A populated working directory: profiles, corpora, trained models and
    config files, built through the same surface the CLI exposes."""
    ws = tmp_path_factory.mktemp("workspace")

    profiles_dir = ws / "profiles"
    detector.save_profiles(profiles_dir)

    train_corpus = helpers.write_gold_file(
        helpers.demo_training_docs(), ws / "train_corpus.jsonl"
    )

    demo = helpers.DEMO_DIR
    train_cfg = ws / "train.cfg"
    train_cfg.write_text(
        "\n".join(
            [
                f"priors = {demo / 'priors.tsv'}",
                f"cooccurrence = {demo / 'cooccurrence.tsv'}",
                f"importance = {demo / 'importance.tsv'}",
                f"topic_parents = {demo / 'topic_parents.tsv'}",
                f"entity_topics = {demo / 'entity_topics.tsv'}",
                "lang_profiles = profiles",
            ]
        )
        + "\n",
        encoding="utf-8",
    )

    models_dir = ws / "models"
    exit_code = cli_main(
        [
            "train",
            "--corpus",
            str(train_corpus),
            "--config",
            str(train_cfg),
            "--out",
            str(models_dir),
        ]
    )
    assert exit_code == 0, "model training via the CLI failed"

    engine_cfg = ws / "engine.cfg"
    engine_cfg.write_text(
        train_cfg.read_text(encoding="utf-8")
        + "\n".join(
            [
                f"decision_tree = models/decision_tree.json",
                f"logistic_regression = models/logistic_regression.json",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return {
        "root": ws,
        "profiles": profiles_dir,
        "models": models_dir,
        "train_corpus": train_corpus,
        "train_cfg": train_cfg,
        "engine_cfg": engine_cfg,
    }


@pytest.fixture(scope="session")
def engine(workspace):
    return build_engine(load_config(workspace["engine_cfg"]))


@pytest.fixture(scope="session")
def sweep_workspace(tmp_path_factory, detector):
    """Like ``workspace`` but over the sweep fixture dictionaries, where the
    ambiguous surface needs context to resolve correctly."""
    ws = tmp_path_factory.mktemp("sweep")
    paths = helpers.write_sweep_dictionaries(ws / "dicts")
    profiles_dir = ws / "profiles"
    detector.save_profiles(profiles_dir)
    train_corpus = helpers.write_gold_file(
        helpers.sweep_training_docs(), ws / "train_corpus.jsonl"
    )
    validation = helpers.write_gold_file(
        helpers.sweep_validation_docs(), ws / "validation.jsonl"
    )
    train_cfg = ws / "train.cfg"
    train_cfg.write_text(
        "\n".join(
            [f"{name} = {path}" for name, path in paths.items()]
            + ["lang_profiles = profiles"]
        )
        + "\n",
        encoding="utf-8",
    )
    exit_code = cli_main(
        [
            "train",
            "--corpus",
            str(train_corpus),
            "--config",
            str(train_cfg),
            "--out",
            str(ws / "models"),
            "--min-leaf",
            "2",
        ]
    )
    assert exit_code == 0, "sweep model training via the CLI failed"
    engine_cfg = ws / "engine.cfg"
    engine_cfg.write_text(
        train_cfg.read_text(encoding="utf-8")
        + "decision_tree = models/decision_tree.json\n"
        + "logistic_regression = models/logistic_regression.json\n",
        encoding="utf-8",
    )
    return {
        "root": ws,
        "train_corpus": train_corpus,
        "validation": validation,
        "train_cfg": train_cfg,
        "engine_cfg": engine_cfg,
    }


@pytest.fixture(scope="session")
def sweep_engine(sweep_workspace):
    return build_engine(load_config(sweep_workspace["engine_cfg"]))
