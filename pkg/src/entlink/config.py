"""Engine configuration: a simple ``key = value`` text file.

Relative paths are resolved against the config file's directory.  Example::

    priors = dicts/priors.tsv
    cooccurrence = dicts/cooccurrence.tsv
    importance = dicts/importance.tsv
    topic_parents = dicts/topic_parents.tsv
    entity_topics = dicts/entity_topics.tsv
    decision_tree = models/decision_tree.json
    logistic_regression = models/logistic_regression.json
    lang_profiles = profiles
    lambda1 = 0.75
    lambda2 = 0.9
    lambda3 = 0.5
    window = 400
    workers = 4
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .classifiers import load_decision_tree, load_logistic_regression
from .core import HYPERPARAMETER_ALIASES, Engine, EngineError, Hyperparameters, ModelPair
from .kb import DictionaryPaths, load_dictionaries
from .preprocess import LanguageDetector, load_abbreviations


class ConfigError(ValueError):
    pass


@dataclass
class EngineConfig:
    priors: Path
    cooccurrence: Path
    importance: Path
    topic_parents: Path
    entity_topics: Path
    decision_tree: Path | None = None
    logistic_regression: Path | None = None
    lang_profiles: Path | None = None
    abbreviations_dir: Path | None = None
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)
    workers: int = 1
    cooccur_top_k: int = 30
    cooccur_min_count: int = 10

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for name in (
            "priors",
            "cooccurrence",
            "importance",
            "topic_parents",
            "entity_topics",
            "decision_tree",
            "logistic_regression",
            "lang_profiles",
            "abbreviations_dir",
        ):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name} path does not exist: {value}")


_PATH_KEYS = {
    "priors",
    "cooccurrence",
    "importance",
    "topic_parents",
    "entity_topics",
    "decision_tree",
    "logistic_regression",
    "lang_profiles",
    "abbreviations_dir",
}
_INT_KEYS = {"workers", "cooccur_top_k", "cooccur_min_count"}


def parse_config_text(text: str, base_dir: Path) -> EngineConfig:
    values: dict[str, object] = {}
    hp_values: dict[str, float | int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _PATH_KEYS:
            values[key] = (base_dir / value).resolve() if value else None
        elif key in _INT_KEYS:
            values[key] = int(value)
        elif key in HYPERPARAMETER_ALIASES:
            canonical = HYPERPARAMETER_ALIASES[key]
            hp_values[canonical] = (
                int(value) if canonical == "window" else float(value)
            )
        else:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
    missing = [
        name
        for name in ("priors", "cooccurrence", "importance", "topic_parents", "entity_topics")
        if name not in values
    ]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    if hp_values:
        values["hyperparameters"] = replace(Hyperparameters(), **hp_values)
    return EngineConfig(**values)  # type: ignore[arg-type]


def load_config(path: str | Path) -> EngineConfig:
    path = Path(path)
    try:
        return parse_config_text(path.read_text(encoding="utf-8"), path.parent)
    except (OSError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise ConfigError(f"{path}: {exc}") from None
        raise ConfigError(f"{path}: {exc}") from exc


def config_fragment(hp: Hyperparameters) -> str:
    """Render hyperparameters as config-file lines."""
    return "\n".join(
        [
            f"lambda1 = {hp.easy_nil_threshold:g}",
            f"lambda2 = {hp.easy_prior_threshold:g}",
            f"lambda3 = {hp.nil_margin:g}",
            f"window = {hp.window}",
        ]
    )


def build_engine(config: EngineConfig) -> Engine:
    """Load every referenced resource and assemble a ready engine."""
    dicts = load_dictionaries(
        DictionaryPaths(
            priors=Path(config.priors),
            cooccurrence=Path(config.cooccurrence),
            importance=Path(config.importance),
            topic_parents=Path(config.topic_parents),
            entity_topics=Path(config.entity_topics),
        ),
        cooccur_top_k=config.cooccur_top_k,
        cooccur_min_count=config.cooccur_min_count,
    )
    models = None
    if config.decision_tree is not None and config.logistic_regression is not None:
        models = ModelPair(
            tree=load_decision_tree(config.decision_tree),
            scorer=load_logistic_regression(config.logistic_regression),
        )
    elif config.decision_tree is not None or config.logistic_regression is not None:
        raise ConfigError(
            "decision_tree and logistic_regression must be configured together"
        )
    detector = None
    if config.lang_profiles is not None:
        detector = LanguageDetector.from_profile_dir(config.lang_profiles)
    abbreviations = None
    if config.abbreviations_dir is not None:
        abbreviations = {
            path.stem: load_abbreviations(path)
            for path in sorted(Path(config.abbreviations_dir).glob("*.txt"))
        }
    return Engine(
        dicts=dicts,
        models=models,
        hyperparameters=config.hyperparameters,
        detector=detector,
        abbreviations=abbreviations,
    )
