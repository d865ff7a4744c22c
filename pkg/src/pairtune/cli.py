"""Command-line pipeline: synthetic data, vocabularies, pairs, training,
evaluation, and the multi-model experiment harness.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    CorpusError,
    DELIMITED_TEXT,
    JSON_LINES,
    RANDOM_BY_EXAMPLE,
    SplitSpec,
    load_corpus,
    load_vectors,
    split_corpus,
    write_corpus,
)
from .encoder import (
    FROZEN_PROJECTION,
    STORAGE_BINARY,
    STORAGE_TEXT,
    TRAINABLE,
    EncoderConfig,
    build_vocab,
    identity_projection,
    init_encoder_params,
    load_model,
    load_vocab,
    make_embedder,
    make_input_fn,
    save_model,
    save_vocab,
)
from .episodes import EpisodeError, EpisodeSpec, generate_episodes, load_pairs, write_pairs
from .evaluation import EvalSpec, delta_cosine_distance, emit_report
from .synthetic import synthetic_corpus
from .training import (
    NaiveConfig,
    NumericError,
    SiameseConfig,
    train_naive,
    train_siamese,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

# Experiment-harness defaults.
DEFAULT_SIAMESE_PAIRS = 70_000
DEFAULT_ALL_PAIRS_PER_DATASET = 10_000
DEFAULT_EVAL_PAIRS = 5_000

MODEL_NAMES = ("ORIG", "NAIVE", "SIAMESE", "ALL")

# Stage seeds derived from one master seed, so reruns and standalone
# commands reproduce the experiment's streams.
SEED_INIT = 0
SEED_NAIVE = 1
SEED_SIAMESE_EPISODES = 2
SEED_SIAMESE_TRAIN = 3
SEED_ALL_EPISODES = 4
SEED_ALL_TRAIN = 5
SEED_EVAL = 6

_CORPUS_FORMATS = {
    "jsonl": JSON_LINES,
    "json-lines": JSON_LINES,
    "tsv": DELIMITED_TEXT,
    "delimited-text": DELIMITED_TEXT,
}


class ConfigError(Exception):
    """Invalid command arguments or experiment configuration."""


def _log(message: str) -> None:
    print(message, file=sys.stderr)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def default_experiment_config() -> dict:
    """The full configuration with every default pinned."""
    return {
        "name": "experiment",
        "train_sets": [],
        "test_sets": [],
        "train_vectors": [],
        "test_vectors": [],
        "models": ["ORIG", "NAIVE", "SIAMESE", "ALL"],
        "seed": 0,
        "out_dir": "runs/experiment",
        "model_format": STORAGE_BINARY,
        "encoder": {
            "mode": TRAINABLE,
            "d_tok": 16,
            "d_in": None,
            "h": 64,
            "d_out": 512,
            "min_count": 1,
        },
        "siamese": {
            "epochs": 30,
            "batch_size": 32,
            "learning_rate": 1e-3,
            "target_same": 1.0,
            "target_diff": 0.0,
            "epsilon_norm": 1e-12,
        },
        "naive": {
            "epochs": 30,
            "batch_size": 32,
            "learning_rate": 1e-3,
            "hidden_dim": 128,
        },
        "episodes": {
            "siamese_pairs": DEFAULT_SIAMESE_PAIRS,
            "all_pairs_per_dataset": DEFAULT_ALL_PAIRS_PER_DATASET,
            "same_fraction": 0.5,
        },
        "eval": {
            "n_pairs": DEFAULT_EVAL_PAIRS,
            "same_fraction": 0.5,
        },
    }


def _merge_config(base: dict, override: dict, prefix: str = "") -> dict:
    merged = dict(base)
    for key, value in override.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field '{dotted}'")
        if isinstance(base[key], dict) and isinstance(value, dict):
            merged[key] = _merge_config(base[key], value, prefix=f"{dotted}.")
        else:
            merged[key] = value
    return merged


def load_experiment_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such config file: {p}")
    try:
        user = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigError(f"{p}: invalid JSON: {err.msg}") from None
    if not isinstance(user, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    return _merge_config(default_experiment_config(), user)


def validate_experiment_config(cfg: dict) -> None:
    models = cfg["models"]
    if not models:
        raise ConfigError("models: list must not be empty")
    unknown = [m for m in models if m not in MODEL_NAMES]
    if unknown:
        raise ConfigError(f"models: unknown model name(s) {unknown}")
    if len(set(models)) != len(models):
        raise ConfigError("models: duplicate entries")
    n_train = len(cfg["train_sets"])
    if ("NAIVE" in models or "SIAMESE" in models) and n_train != 1:
        raise ConfigError(
            f"train_sets: NAIVE and SIAMESE need exactly one train set, got {n_train}"
        )
    if "ALL" in models and n_train < 1:
        raise ConfigError("train_sets: ALL needs at least one train set")
    if not cfg["test_sets"]:
        raise ConfigError("test_sets: need at least one test set")
    mode = cfg["encoder"]["mode"]
    if mode not in (TRAINABLE, FROZEN_PROJECTION):
        raise ConfigError(f"encoder.mode: unknown mode '{mode}'")
    if mode == FROZEN_PROJECTION:
        if len(cfg["train_vectors"]) != n_train:
            raise ConfigError("train_vectors: need one vector file per train set")
        if len(cfg["test_vectors"]) != len(cfg["test_sets"]):
            raise ConfigError("test_vectors: need one vector file per test set")
    if cfg["model_format"] not in (STORAGE_BINARY, STORAGE_TEXT):
        raise ConfigError(f"model_format: unknown format '{cfg['model_format']}'")


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _corpus_format(args) -> str | None:
    if getattr(args, "format", None) is None:
        return None
    return _CORPUS_FORMATS[args.format]


def _load_corpora(paths, format=None):
    corpora = [load_corpus(p, format=format) for p in paths]
    seen = set()
    for corpus in corpora:
        if corpus.dataset_id in seen:
            raise CorpusError(f"duplicate dataset id '{corpus.dataset_id}'")
        seen.add(corpus.dataset_id)
    return corpora


def cmd_gen_synthetic(args) -> None:
    corpus = synthetic_corpus(
        args.dataset_id or Path(args.out).stem,
        args.classes,
        args.examples_per_class,
        n_groups=args.groups,
        group_size=args.group_size,
        groups_per_class=args.groups_per_class,
        tokens_per_example=args.tokens_per_example,
        domain_noise=args.domain_noise,
        class_offset=args.class_offset,
        token_namespace=args.namespace,
        seed=args.seed,
    )
    fmt = _corpus_format(args)
    if args.test_fraction is not None:
        if args.test_out is None:
            raise ConfigError("--test-fraction needs --test-out")
        train, test = split_corpus(
            corpus,
            SplitSpec(mode=RANDOM_BY_EXAMPLE, fraction=1.0 - args.test_fraction, seed=args.seed),
        )
        write_corpus(train, args.out, format=fmt)
        write_corpus(test, args.test_out, format=fmt)
        _log(f"wrote {len(train)} examples to {args.out}, {len(test)} to {args.test_out}")
    else:
        write_corpus(corpus, args.out, format=fmt)
        _log(f"wrote {len(corpus)} examples ({corpus.n_classes} classes) to {args.out}")


def cmd_build_vocab(args) -> None:
    corpora = _load_corpora(args.train, format=_corpus_format(args))
    vocab = build_vocab(corpora, min_count=args.min_count)
    save_vocab(vocab, args.out)
    _log(f"vocabulary of {vocab.size} tokens written to {args.out}")


def _pair_quotas(corpora, pairs, pairs_per_dataset) -> dict[str, int]:
    if pairs is not None and pairs_per_dataset is not None:
        raise ConfigError("give either a total pair count or a per-dataset count, not both")
    if pairs_per_dataset is not None:
        per = pairs_per_dataset
    elif pairs is not None:
        if len(corpora) > 1 and pairs % len(corpora) != 0:
            raise ConfigError(
                f"total pair count {pairs} does not split evenly over {len(corpora)} datasets"
            )
        per = pairs // len(corpora)
    elif len(corpora) == 1:
        per = DEFAULT_SIAMESE_PAIRS
    else:
        per = DEFAULT_ALL_PAIRS_PER_DATASET
    return {c.dataset_id: per for c in corpora}


def cmd_gen_pairs(args) -> None:
    corpora = _load_corpora(args.train, format=_corpus_format(args))
    quotas = _pair_quotas(corpora, args.pairs, args.pairs_per_dataset)
    spec = EpisodeSpec(quotas=quotas, same_fraction=args.same_fraction, seed=args.seed)
    pairs = generate_episodes(corpora, spec)
    write_pairs(pairs, args.out)
    _log(f"wrote {len(pairs)} pairs ({len(quotas)} dataset(s)) to {args.out}")


def _encoder_setup(args, corpora):
    """Build (config, vocab, tables, params_seed_fn) from train-time flags."""
    if args.vectors:
        if len(args.vectors) != len(corpora):
            raise ConfigError("need one --vectors file per train set")
        tables = {}
        dim = None
        for corpus, vec_path in zip(corpora, args.vectors):
            table = load_vectors(vec_path)
            if dim is None:
                dim = table.dim
            elif table.dim != dim:
                raise CorpusError(
                    f"vector dimension mismatch: {table.dim} vs {dim} in {vec_path}"
                )
            tables[corpus.dataset_id] = table
        config = EncoderConfig(
            mode=FROZEN_PROJECTION, d_in=dim, h=args.hidden_width, d_out=args.d_out
        )
        return config, None, tables
    config = EncoderConfig(
        mode=TRAINABLE, d_tok=args.d_tok, h=args.hidden_width, d_out=args.d_out
    )
    if args.vocab:
        vocab = load_vocab(args.vocab)
    else:
        vocab = build_vocab(corpora, min_count=args.min_count)
    return config, vocab, None


def cmd_train(args) -> None:
    mode = args.mode.upper()
    if mode not in ("NAIVE", "SIAMESE", "ALL"):
        raise ConfigError(f"unknown training mode '{args.mode}'")
    if mode in ("NAIVE", "SIAMESE") and len(args.train) != 1:
        raise ConfigError(f"{mode} needs exactly one train set, got {len(args.train)}")
    if mode == "ALL" and len(args.train) < 1:
        raise ConfigError("ALL needs at least one train set")
    if mode == "ALL" and len(args.train) == 1:
        _log("note: ALL with a single train set is equivalent to SIAMESE")

    corpora = _load_corpora(args.train)
    config, vocab, tables = _encoder_setup(args, corpora)
    input_fn = make_input_fn(config, vocab=vocab, vectors=tables)
    params = init_encoder_params(
        config,
        vocab_size=vocab.size if vocab is not None else None,
        seed=args.seed + SEED_INIT,
    )

    if mode == "NAIVE":
        ncfg = NaiveConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            hidden_dim=args.hidden_dim,
            seed=args.seed + SEED_NAIVE,
        )
        params, _head, report = train_naive(params, config, corpora[0], input_fn, ncfg, log=_log)
        _log("classification head discarded; keeping the finetuned encoder")
    else:
        episode_seed = args.seed + (SEED_SIAMESE_EPISODES if mode == "SIAMESE" else SEED_ALL_EPISODES)
        train_seed = args.seed + (SEED_SIAMESE_TRAIN if mode == "SIAMESE" else SEED_ALL_TRAIN)
        if args.pairs_in:
            pairs = load_pairs(args.pairs_in, corpora)
        else:
            quotas = _pair_quotas(corpora, args.pairs, args.pairs_per_dataset)
            pairs = generate_episodes(
                corpora,
                EpisodeSpec(quotas=quotas, same_fraction=args.same_fraction, seed=episode_seed),
            )
        scfg = SiameseConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            seed=train_seed,
        )
        params, report = train_siamese(params, config, pairs, input_fn, scfg, log=_log)

    save_model(args.out, config, params, vocab, storage=args.format)
    _log(f"model written to {args.out}")
    if args.loss_curve:
        _write_loss_curve(args.loss_curve, report)


def _write_loss_curve(path, report) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch\tmean_loss\n")
        for epoch, loss in enumerate(report.epoch_losses, start=1):
            f.write(f"{epoch}\t{loss:.9g}\n")


def _eval_tables(args, tests):
    if not args.vectors:
        return None
    if len(args.vectors) not in (1, len(tests)):
        raise ConfigError("--vectors must appear once or once per test set")
    paths = args.vectors * len(tests) if len(args.vectors) == 1 else args.vectors
    tables = [load_vectors(p) for p in paths]
    dims = {t.dim for t in tables}
    if len(dims) != 1:
        raise CorpusError(f"vector files disagree on dimension: {sorted(dims)}")
    return tables


def cmd_eval(args) -> None:
    tests = _load_corpora(args.test)
    tables = _eval_tables(args, tests)
    spec = EvalSpec(n_pairs=args.n_pairs, same_fraction=args.same_fraction, seed=args.seed)

    if args.model:
        config, params, vocab = load_model(args.model)
        name = args.model_name or Path(args.model).stem
        if config.mode == FROZEN_PROJECTION and tables is None:
            raise ConfigError("a frozen-projection model needs --vectors for the test sets")
    else:
        if tables is None:
            raise ConfigError("--orig needs --vectors with the test-set embeddings")
        dim = tables[0].dim
        if args.d_out is not None and args.d_out != dim:
            config = EncoderConfig(
                mode=FROZEN_PROJECTION, d_in=dim, h=args.hidden_width, d_out=args.d_out
            )
            params = init_encoder_params(config, seed=args.seed + SEED_INIT)
        else:
            config, params = identity_projection(dim)
        vocab = None
        name = args.model_name or "ORIG"

    rows = []
    for i, test in enumerate(tests):
        embedder = make_embedder(
            config,
            params,
            vocab=vocab,
            vectors=tables[i] if tables is not None else None,
        )
        rows.append((name, test.dataset_id, delta_cosine_distance(embedder, test, spec)))
        _log(f"{name} on {test.dataset_id}: delta={rows[-1][2].delta:.6f}")
    emit_report(rows, args.out)
    _log(f"report written to {args.out}")


def cmd_experiment(args) -> None:
    cfg = load_experiment_config(args.config)
    if args.out_dir is not None:
        cfg["out_dir"] = args.out_dir
    if args.seed is not None:
        cfg["seed"] = args.seed
    validate_experiment_config(cfg)
    run_experiment(cfg)


def run_experiment(cfg: dict) -> Path:
    """Train every requested model, evaluate on every test set, and write
    the consolidated report. Returns the output directory.

    Fails fast on the first error; an INCOMPLETE marker flags partial
    output until the run finishes.
    """
    validate_experiment_config(cfg)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / "INCOMPLETE"
    marker.write_text("experiment in progress\n", encoding="utf-8")
    try:
        _experiment_pipeline(cfg, out_dir)
    except Exception as err:
        marker.write_text(f"experiment failed: {err}\n", encoding="utf-8")
        raise
    marker.unlink()
    return out_dir


def _experiment_pipeline(cfg: dict, out_dir: Path) -> None:
    seed = cfg["seed"]
    enc = cfg["encoder"]
    mode = enc["mode"]

    train_corpora = _load_corpora(cfg["train_sets"])
    test_corpora = _load_corpora(cfg["test_sets"])

    vocab = None
    train_tables = None
    test_tables = None
    if mode == TRAINABLE:
        config = EncoderConfig(mode=TRAINABLE, d_tok=enc["d_tok"], h=enc["h"], d_out=enc["d_out"])
        vocab_source = train_corpora if train_corpora else test_corpora
        vocab = build_vocab(vocab_source, min_count=enc["min_count"])
    else:
        train_tables = {
            c.dataset_id: load_vectors(p) for c, p in zip(train_corpora, cfg["train_vectors"])
        }
        test_tables = [load_vectors(p) for p in cfg["test_vectors"]]
        dims = {t.dim for t in list(train_tables.values()) + test_tables}
        if len(dims) != 1:
            raise CorpusError(f"vector files disagree on dimension: {sorted(dims)}")
        d_in = dims.pop()
        config = EncoderConfig(mode=FROZEN_PROJECTION, d_in=d_in, h=enc["h"], d_out=enc["d_out"])

    base_params = init_encoder_params(
        config,
        vocab_size=vocab.size if vocab is not None else None,
        seed=seed + SEED_INIT,
    )
    input_fn = make_input_fn(config, vocab=vocab, vectors=train_tables)
    ep = cfg["episodes"]

    trained: dict[str, tuple[EncoderConfig, object]] = {}
    for model in cfg["models"]:
        _log(f"--- {model} ---")
        if model == "ORIG":
            if mode == FROZEN_PROJECTION and enc["d_out"] == config.d_in:
                orig_config, orig_params = identity_projection(config.d_in)
            else:
                orig_config, orig_params = config, base_params.copy()
            trained[model] = (orig_config, orig_params)
            _log("untrained surrogate; no finetuning")
            report = None
        elif model == "NAIVE":
            ncfg = NaiveConfig(seed=seed + SEED_NAIVE, **cfg["naive"])
            params, _head, report = train_naive(
                base_params.copy(), config, train_corpora[0], input_fn, ncfg, log=_log
            )
            trained[model] = (config, params)
        elif model == "SIAMESE":
            quotas = {train_corpora[0].dataset_id: ep["siamese_pairs"]}
            pairs = generate_episodes(
                train_corpora[:1],
                EpisodeSpec(
                    quotas=quotas,
                    same_fraction=ep["same_fraction"],
                    seed=seed + SEED_SIAMESE_EPISODES,
                ),
            )
            scfg = SiameseConfig(seed=seed + SEED_SIAMESE_TRAIN, **cfg["siamese"])
            params, report = train_siamese(
                base_params.copy(), config, pairs, input_fn, scfg, log=_log
            )
            trained[model] = (config, params)
        else:  # ALL
            quotas = {c.dataset_id: ep["all_pairs_per_dataset"] for c in train_corpora}
            pairs = generate_episodes(
                train_corpora,
                EpisodeSpec(
                    quotas=quotas,
                    same_fraction=ep["same_fraction"],
                    seed=seed + SEED_ALL_EPISODES,
                ),
            )
            scfg = SiameseConfig(seed=seed + SEED_ALL_TRAIN, **cfg["siamese"])
            params, report = train_siamese(
                base_params.copy(), config, pairs, input_fn, scfg, log=_log
            )
            trained[model] = (config, params)

        model_config, model_params = trained[model]
        model_vocab = vocab if model_config.mode == TRAINABLE else None
        save_model(
            out_dir / f"{model}.ptm",
            model_config,
            model_params,
            model_vocab,
            storage=cfg["model_format"],
        )
        if report is not None:
            _write_loss_curve(out_dir / f"{model}.losses.tsv", report)

    eval_spec = EvalSpec(
        n_pairs=cfg["eval"]["n_pairs"],
        same_fraction=cfg["eval"]["same_fraction"],
        seed=seed + SEED_EVAL,
    )
    rows = []
    for model in cfg["models"]:
        model_config, model_params = trained[model]
        for i, test in enumerate(test_corpora):
            embedder = make_embedder(
                model_config,
                model_params,
                vocab=vocab if model_config.mode == TRAINABLE else None,
                vectors=test_tables[i] if test_tables is not None else None,
            )
            result = delta_cosine_distance(embedder, test, eval_spec)
            rows.append((model, test.dataset_id, result))
            _log(f"{model} on {test.dataset_id}: delta={result.delta:.6f}")

    emit_report(rows, out_dir / "consolidated.tsv")
    metadata = {
        "name": cfg["name"],
        "package_version": __version__,
        "config": cfg,
        "orig_note": (
            "ORIG rows come from an untrained surrogate (the seed-initialized "
            "reference encoder, or an identity projection over supplied "
            "vectors), not from a pretrained sentence encoder."
        ),
    }
    (out_dir / "metadata.json").write_text(
        json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _log(f"consolidated report: {out_dir / 'consolidated.tsv'}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="pairtune", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pairtune {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a seeded synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-id", default=None)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--examples-per-class", type=int, required=True)
    p.add_argument("--groups", type=int, required=True)
    p.add_argument("--group-size", type=int, default=20)
    p.add_argument("--groups-per-class", type=int, default=1)
    p.add_argument("--tokens-per-example", type=int, default=8)
    p.add_argument("--domain-noise", type=float, default=0.0)
    p.add_argument("--class-offset", type=int, default=0)
    p.add_argument("--namespace", default="")
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--test-out", default=None)
    p.add_argument("--format", choices=sorted(_CORPUS_FORMATS), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("build-vocab", help="build a token vocabulary from corpora")
    p.add_argument("--train", action="append", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--format", choices=sorted(_CORPUS_FORMATS), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("gen-pairs", help="generate same/different training pairs")
    p.add_argument("--train", action="append", required=True)
    p.add_argument("--pairs", type=int, default=None, help="total pair count")
    p.add_argument("--pairs-per-dataset", type=int, default=None)
    p.add_argument("--same-fraction", type=float, default=0.5)
    p.add_argument("--format", choices=sorted(_CORPUS_FORMATS), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_pairs)

    p = sub.add_parser("train", help="finetune an encoder (NAIVE, SIAMESE or ALL)")
    p.add_argument("--mode", required=True)
    p.add_argument("--train", action="append", required=True)
    p.add_argument("--vectors", action="append", default=None,
                   help="per-train-set vector files; selects frozen-projection mode")
    p.add_argument("--vocab", default=None, help="reuse a saved vocabulary")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--d-tok", type=int, default=16)
    p.add_argument("--hidden-width", type=int, default=64, help="encoder hidden width")
    p.add_argument("--d-out", type=int, default=512)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--hidden-dim", type=int, default=128, help="NAIVE head width")
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--pairs-per-dataset", type=int, default=None)
    p.add_argument("--pairs-in", default=None, help="replay a gen-pairs dump")
    p.add_argument("--same-fraction", type=float, default=0.5)
    p.add_argument("--loss-curve", default=None, help="write per-epoch losses here")
    p.add_argument("--format", choices=(STORAGE_BINARY, STORAGE_TEXT), default=STORAGE_BINARY)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate model(s) on test sets")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", default=None)
    group.add_argument("--orig", action="store_true",
                       help="untrained surrogate over --vectors embeddings")
    p.add_argument("--vectors", action="append", default=None)
    p.add_argument("--test", action="append", required=True)
    p.add_argument("--n-pairs", type=int, default=DEFAULT_EVAL_PAIRS)
    p.add_argument("--same-fraction", type=float, default=0.5)
    p.add_argument("--d-out", type=int, default=None,
                   help="with --orig: project to this width instead of identity")
    p.add_argument("--hidden-width", type=int, default=64)
    p.add_argument("--model-name", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run a configured multi-model experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        args.func(args)
        return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        print(f"invalid value: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CorpusError, EpisodeError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
