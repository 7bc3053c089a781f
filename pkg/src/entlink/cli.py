"""Command-line surface: dictionary building, model training, annotation,
evaluation, sweeping, profiling and the HTTP service."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from .classifiers import (
    dt_predict,
    lr_score,
    save_decision_tree,
    save_logistic_regression,
    train_decision_tree,
    train_logistic_regression,
)
from .config import ConfigError, build_engine, config_fragment, load_config
from .core import HYPERPARAMETER_ALIASES, EngineError, record_to_json
from .evaluation import (
    EvaluationError,
    parameter_sweep,
    read_gold_documents,
    evaluate,
    sweep_table,
)
from .kb import DictionaryError
from .preprocess import LanguageDetector
from .profiling import bucket_table, linear_fit, time_documents
from .training import collect_training_examples

USAGE_ERROR = 2


def _read_lines(path: str | None):
    if path in (None, "-"):
        return [line.rstrip("\n") for line in sys.stdin]
    return Path(path).read_text(encoding="utf-8").splitlines()


def _input_texts(args) -> tuple[list[str], list[str | None]]:
    texts: list[str] = []
    languages: list[str | None] = []
    for line in _read_lines(args.input):
        if not line.strip():
            continue
        if args.format == "jsonl":
            record = json.loads(line)
            texts.append(record["text"])
            languages.append(record.get("language") or args.language)
        else:
            texts.append(line)
            languages.append(args.language)
    return texts, languages


def cmd_build_dicts(args) -> int:
    docs = corpus_mod.read_corpus(args.corpus)
    if not docs:
        print("error: empty corpus", file=sys.stderr)
        return USAGE_ERROR
    if args.densify:
        docs = corpus_mod.densify(docs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    priors = {}
    mention_occurrences = 0
    for language in sorted({d.language for d in docs}):
        subset = [d for d in docs if d.language == language]
        priors[language] = corpus_mod.build_mention_entity_priors(subset, language)
        mention_occurrences += sum(len(d.annotations) for d in subset)
    cooccurrence = corpus_mod.build_entity_cooccurrence(
        docs, window_tokens=args.window, top_k=args.top_k, min_count=args.min_count
    )
    corpus_mod.write_priors_file(priors, out_dir / "priors.tsv")
    corpus_mod.write_cooccurrence_file(cooccurrence, out_dir / "cooccurrence.tsv")
    entities = {
        entity
        for table in priors.values()
        for cands in table.values()
        for entity, _ in cands
        if not entity.is_sentinel()
    }
    surfaces = sum(len(table) for table in priors.values())
    print(f"documents={len(docs)} languages={len(priors)} surfaces={surfaces}")
    print(f"mention_occurrences={mention_occurrences} entities={len(entities)}")
    print(f"cooccurrence_entities={len(cooccurrence)}")
    return 0


def cmd_train_lang_profiles(args) -> int:
    samples = {}
    for path in sorted(Path(args.samples).glob("*.txt")):
        samples[path.stem] = path.read_text(encoding="utf-8")
    if not samples:
        print(f"error: no .txt sample files in {args.samples}", file=sys.stderr)
        return USAGE_ERROR
    detector = LanguageDetector.train(samples)
    written = detector.save_profiles(args.out)
    print(f"trained {len(written)} language profiles: {', '.join(detector.languages)}")
    return 0


def cmd_train(args) -> int:
    engine = build_engine(load_config(args.config))
    gold_docs = read_gold_documents(args.corpus)
    training = collect_training_examples(engine, gold_docs)
    tree = train_decision_tree(
        training.examples, max_depth=args.max_depth, min_leaf=args.min_leaf
    )
    scorer = train_logistic_regression(
        training.examples,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        l2=args.l2,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_decision_tree(tree, out_dir / "decision_tree.json")
    save_logistic_regression(scorer, out_dir / "logistic_regression.json")
    tree_hits = sum(
        dt_predict(tree, ex.features) == ex.label for ex in training.examples
    )
    lr_hits = sum(
        (lr_score(scorer, ex.features) >= 0.5) == ex.label for ex in training.examples
    )
    n = len(training.examples)
    print(
        f"documents={training.documents} mentions={training.mentions} "
        f"hard_mentions={training.hard_mentions} examples={n}"
    )
    print(f"decision_tree_training_accuracy={tree_hits / n:.6f}")
    print(f"logistic_regression_training_accuracy={lr_hits / n:.6f}")
    return 0


def cmd_annotate(args) -> int:
    engine = build_engine(load_config(args.config))
    texts, languages = _input_texts(args)

    def one(pair: tuple[str, str | None]) -> dict:
        text, language = pair
        try:
            return engine.annotate(text, language=language).to_record()
        except EngineError as exc:
            return {"error": str(exc), "text": text}

    if args.workers <= 1:
        records = [one(pair) for pair in zip(texts, languages)]
    else:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            records = list(pool.map(one, zip(texts, languages)))
    failures = 0
    for record in records:
        if "error" in record:
            failures += 1
        print(record_to_json(record))
    if failures and args.strict:
        print(f"error: {failures} documents failed", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    predictions = []
    for line in _read_lines(args.predictions):
        if line.strip():
            predictions.append(json.loads(line))
    gold = read_gold_documents(args.gold)
    metrics = evaluate(predictions, gold, strict=args.strict)
    print(f"tp={metrics.tp} fp={metrics.fp} fn={metrics.fn} tn={metrics.tn}")
    print(
        f"precision={metrics.precision:.6f} recall={metrics.recall:.6f} "
        f"f1={metrics.f1:.6f} accuracy={metrics.accuracy:.6f}"
    )
    return 0


def _parse_grid(specs: list[str]) -> dict[str, list]:
    """Grid specs: ``name=v1,v2,...`` or ``name=start:step:stop`` (inclusive)."""
    grid: dict[str, list] = {}
    for spec in specs:
        if "=" not in spec:
            raise EvaluationError(f"malformed grid spec {spec!r}")
        name, _, body = spec.partition("=")
        name = name.strip()
        if name not in HYPERPARAMETER_ALIASES:
            raise EvaluationError(f"unknown hyperparameter {name!r} in grid spec")
        is_window = HYPERPARAMETER_ALIASES[name] == "window"
        cast = int if is_window else float
        body = body.strip()
        if ":" in body:
            parts = body.split(":")
            if len(parts) != 3:
                raise EvaluationError(f"malformed range in grid spec {spec!r}")
            start, step, stop = (float(p) for p in parts)
            if step <= 0:
                raise EvaluationError(f"grid step must be positive in {spec!r}")
            values = []
            v = start
            while v <= stop + 1e-12:
                values.append(cast(round(v, 12)))
                v += step
        else:
            values = [cast(p) for p in body.split(",") if p.strip()]
        if not values:
            raise EvaluationError(f"no values in grid spec {spec!r}")
        grid[name] = values
    if not grid:
        raise EvaluationError("no grid specs given")
    return grid


def cmd_sweep(args) -> int:
    engine = build_engine(load_config(args.config))
    validation = read_gold_documents(args.validation)
    grid = _parse_grid(args.grid)
    result = parameter_sweep(validation, grid, engine)
    print(sweep_table(result))
    fragment = config_fragment(result.best)
    if args.out:
        Path(args.out).write_text(fragment + "\n", encoding="utf-8")
        print(f"# best parameters written to {args.out}")
    print("# best:")
    print("\n".join("# " + line for line in fragment.splitlines()))
    return 0


def cmd_profile(args) -> int:
    engine = build_engine(load_config(args.config))
    texts, languages = _input_texts(args)
    language = languages[0] if languages and len(set(languages)) == 1 else None
    timings = time_documents(engine, texts, language=language)
    print("bucket_lo\tbucket_hi\tdocuments\tpreprocess_ms\tdisambiguate_ms\ttotal_ms")
    for row in bucket_table(timings):
        print(
            f"{row['bucket_lo']}\t{row['bucket_hi']}\t{row['documents']}\t"
            f"{row['preprocess_ms']:.3f}\t{row['disambiguate_ms']:.3f}\t"
            f"{row['total_ms']:.3f}"
        )
    if len(timings) >= 2:
        slope, intercept, r2 = linear_fit(timings)
        print(
            f"# fit: total_seconds = {slope:.3e} * bytes + {intercept:.3e} "
            f"(r_squared={r2:.4f})"
        )
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    config = load_config(args.config)
    workers = args.workers if args.workers else config.workers
    serve(config, host=args.host, port=args.port, workers=workers)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entlink",
        description="Dictionary-driven entity disambiguation and linking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dicts", help="build priors and cooccurrence files")
    p.add_argument("corpus", help="annotated corpus (JSON lines)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--top-k", type=int, default=30)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--densify", action="store_true",
                   help="propagate unambiguous annotations first")
    p.set_defaults(func=cmd_build_dicts)

    p = sub.add_parser("train-lang-profiles", help="train language profiles")
    p.add_argument("samples", help="directory of <lang>.txt sample files")
    p.add_argument("--out", required=True, help="profile output directory")
    p.set_defaults(func=cmd_train_lang_profiles)

    p = sub.add_parser("train", help="train the classifier pair")
    p.add_argument("--corpus", required=True, help="gold documents (JSON lines)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--l2", type=float, default=1e-4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("annotate", help="annotate documents")
    p.add_argument("input", nargs="?", help="input file, '-' or stdin")
    p.add_argument("--config", required=True)
    p.add_argument("--format", choices=("text", "jsonl"), default="text")
    p.add_argument("--language", help="skip detection and use this language")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("predictions", help="annotate output (JSON lines)")
    p.add_argument("gold", help="gold documents (JSON lines)")
    p.add_argument("--strict", action="store_true",
                   help="error on unaligned mention spans")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid-sweep hyperparameters")
    p.add_argument("--validation", required=True, help="gold documents")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", action="append", required=True,
                   help="e.g. lambda2=0.5,0.9 or lambda1=0.5:0.05:0.95")
    p.add_argument("--out", help="write best parameters as a config fragment")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profile", help="measure runtime against text length")
    p.add_argument("input", nargs="?", help="input file, '-' or stdin")
    p.add_argument("--config", required=True)
    p.add_argument("--format", choices=("text", "jsonl"), default="text")
    p.add_argument("--language")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("serve", help="run the HTTP annotation service")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8378)
    p.add_argument("--workers", type=int, default=0,
                   help="bound on concurrent requests (default: from config)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DictionaryError, EngineError, EvaluationError,
            corpus_mod.CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
