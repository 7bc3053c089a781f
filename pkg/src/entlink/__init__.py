"""entlink: dictionary-driven entity disambiguation and linking.

The engine extracts mentions by greedy dictionary matching, resolves the
unambiguous ones straight from corpus priors, and scores the remaining
candidates with a decision tree and a logistic regression over five features
computed against the already-resolved context.
"""

from .classifiers import (
    DecisionTreeModel,
    LabeledExample,
    LogisticRegressionModel,
    dt_predict,
    gradient_check,
    lr_score,
    train_decision_tree,
    train_logistic_regression,
)
from .config import EngineConfig, build_engine, load_config
from .core import (
    DocumentAnnotation,
    Engine,
    EngineError,
    Hyperparameters,
    ModelPair,
    UnsupportedLanguageError,
    annotate_bulk,
    final_disambiguation,
    first_pass,
    second_pass,
)
from .corpus import (
    AnnotatedDocument,
    Annotation,
    build_entity_cooccurrence,
    build_mention_entity_priors,
    densify,
)
from .evaluation import (
    GoldDocument,
    GoldMention,
    Metrics,
    evaluate,
    parameter_sweep,
)
from .features import (
    DocumentContext,
    EntityContext,
    FeatureVector,
    compute_feature_vector,
)
from .kb import (
    MISC,
    NIL,
    DictionaryPaths,
    DictionarySet,
    EntityId,
    load_dictionaries,
    surface_key,
    topic_distance,
)
from .preprocess import (
    LanguageDetector,
    Mention,
    Token,
    break_sentences,
    extract_mentions,
    normalize,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDocument",
    "Annotation",
    "DecisionTreeModel",
    "DictionaryPaths",
    "DictionarySet",
    "DocumentAnnotation",
    "DocumentContext",
    "Engine",
    "EngineConfig",
    "EngineError",
    "EntityContext",
    "EntityId",
    "FeatureVector",
    "GoldDocument",
    "GoldMention",
    "Hyperparameters",
    "LabeledExample",
    "LanguageDetector",
    "LogisticRegressionModel",
    "MISC",
    "Mention",
    "Metrics",
    "ModelPair",
    "NIL",
    "Token",
    "UnsupportedLanguageError",
    "annotate_bulk",
    "build_engine",
    "build_entity_cooccurrence",
    "build_mention_entity_priors",
    "break_sentences",
    "compute_feature_vector",
    "densify",
    "dt_predict",
    "evaluate",
    "extract_mentions",
    "final_disambiguation",
    "first_pass",
    "gradient_check",
    "load_config",
    "load_dictionaries",
    "lr_score",
    "normalize",
    "parameter_sweep",
    "second_pass",
    "surface_key",
    "tokenize",
    "topic_distance",
    "train_decision_tree",
    "train_logistic_regression",
]
