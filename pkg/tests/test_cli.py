import json

from pairtune.cli import (
    EXIT_DATA,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    default_experiment_config,
    main,
)
from pairtune.corpus import load_corpus
from pairtune.encoder import load_model, load_vocab
from pairtune.evaluation import parse_report


def run(*argv):
    return main([str(a) for a in argv])


def gen_corpus(path, *, classes=3, per_class=30, groups=None, seed=0, extra=()):
    argv = [
        "gen-synthetic", "--out", path,
        "--classes", classes, "--examples-per-class", per_class,
        "--groups", groups if groups is not None else classes,
        "--group-size", 20, "--tokens-per-example", 6, "--seed", seed,
    ]
    argv += list(extra)
    assert run(*argv) == EXIT_OK
    return path


class TestGenSynthetic:
    def test_writes_loadable_corpus(self, tmp_path):
        path = gen_corpus(tmp_path / "syn.jsonl", classes=4, per_class=10, groups=4)
        corpus = load_corpus(path)
        assert corpus.n_classes == 4
        assert len(corpus) == 40

    def test_split_output(self, tmp_path):
        train = tmp_path / "train.jsonl"
        test = tmp_path / "test.jsonl"
        assert run(
            "gen-synthetic", "--out", train, "--test-out", test,
            "--test-fraction", 0.2, "--classes", 3, "--examples-per-class", 20,
            "--groups", 3, "--seed", 1,
        ) == EXIT_OK
        assert len(load_corpus(train)) == 48
        assert len(load_corpus(test)) == 12

    def test_missing_test_out_is_usage_error(self, tmp_path):
        assert run(
            "gen-synthetic", "--out", tmp_path / "x.jsonl", "--test-fraction", 0.2,
            "--classes", 3, "--examples-per-class", 5, "--groups", 3,
        ) == EXIT_USAGE


class TestBuildVocab:
    def test_vocab_file(self, tmp_path):
        corpus = gen_corpus(tmp_path / "c.jsonl")
        out = tmp_path / "vocab.txt"
        assert run("build-vocab", "--train", corpus, "--out", out) == EXIT_OK
        vocab = load_vocab(out)
        assert vocab.size > 1


class TestGenPairs:
    def test_pair_dump_counts(self, tmp_path):
        c1 = gen_corpus(tmp_path / "c1.jsonl", seed=1, extra=("--namespace", "c1"))
        c2 = gen_corpus(tmp_path / "c2.jsonl", seed=2, extra=("--namespace", "c2"))
        out = tmp_path / "pairs.tsv"
        assert run(
            "gen-pairs", "--train", c1, "--train", c2,
            "--pairs-per-dataset", 50, "--seed", 3, "--out", out,
        ) == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 100
        assert sum(1 for l in lines if l.startswith("c1\t")) == 50

    def test_uneven_total_is_usage_error(self, tmp_path):
        c1 = gen_corpus(tmp_path / "c1.jsonl", seed=1)
        c2 = gen_corpus(tmp_path / "c2.jsonl", seed=2, extra=("--namespace", "x"))
        assert run(
            "gen-pairs", "--train", c1, "--train", c2,
            "--pairs", 101, "--out", tmp_path / "p.tsv",
        ) == EXIT_USAGE


SMALL_TRAIN = (
    "--d-tok", 8, "--hidden-width", 16, "--d-out", 8,
    "--epochs", 2, "--pairs", 200, "--seed", 9,
)


class TestTrainCommand:
    def test_siamese_round_trip_and_determinism(self, tmp_path):
        corpus = gen_corpus(tmp_path / "c.jsonl")
        m1 = tmp_path / "m1.ptm"
        m2 = tmp_path / "m2.ptm"
        curve = tmp_path / "loss.tsv"
        assert run("train", "--mode", "SIAMESE", "--train", corpus,
                   "--out", m1, "--loss-curve", curve, *SMALL_TRAIN) == EXIT_OK
        assert run("train", "--mode", "SIAMESE", "--train", corpus,
                   "--out", m2, *SMALL_TRAIN) == EXIT_OK
        assert m1.read_bytes() == m2.read_bytes()
        config, params, vocab = load_model(m1)
        assert config.d_out == 8
        assert curve.read_text().startswith("epoch\tmean_loss\n")
        assert len(curve.read_text().splitlines()) == 3

    def test_naive_training(self, tmp_path):
        corpus = gen_corpus(tmp_path / "c.jsonl")
        out = tmp_path / "m.ptm"
        assert run("train", "--mode", "NAIVE", "--train", corpus, "--out", out,
                   "--d-tok", 8, "--hidden-width", 16, "--d-out", 8,
                   "--epochs", 2, "--hidden-dim", 16, "--seed", 4) == EXIT_OK
        assert out.exists()

    def test_naive_with_two_train_sets_is_usage_error(self, tmp_path):
        c1 = gen_corpus(tmp_path / "c1.jsonl", seed=1)
        c2 = gen_corpus(tmp_path / "c2.jsonl", seed=2, extra=("--namespace", "x"))
        assert run("train", "--mode", "NAIVE", "--train", c1, "--train", c2,
                   "--out", tmp_path / "m.ptm") == EXIT_USAGE

    def test_all_mode_trains_on_every_dataset(self, tmp_path):
        c1 = gen_corpus(tmp_path / "c1.jsonl", seed=1, extra=("--namespace", "c1"))
        c2 = gen_corpus(tmp_path / "c2.jsonl", seed=2, extra=("--namespace", "c2"))
        out = tmp_path / "all.ptm"
        assert run("train", "--mode", "ALL", "--train", c1, "--train", c2,
                   "--out", out, "--d-tok", 8, "--hidden-width", 16, "--d-out", 8,
                   "--epochs", 1, "--pairs-per-dataset", 50, "--seed", 5) == EXIT_OK
        assert out.exists()

    def test_pair_replay(self, tmp_path):
        corpus = gen_corpus(tmp_path / "c.jsonl")
        pairs = tmp_path / "pairs.tsv"
        assert run("gen-pairs", "--train", corpus, "--pairs", 200,
                   "--seed", 11, "--out", pairs) == EXIT_OK
        out = tmp_path / "m.ptm"
        assert run("train", "--mode", "SIAMESE", "--train", corpus,
                   "--pairs-in", pairs, "--out", out,
                   "--d-tok", 8, "--hidden-width", 16, "--d-out", 8,
                   "--epochs", 1, "--seed", 11) == EXIT_OK

    def test_missing_corpus_is_data_error(self, tmp_path):
        assert run("train", "--mode", "SIAMESE", "--train", tmp_path / "nope.jsonl",
                   "--out", tmp_path / "m.ptm") == EXIT_DATA

    def test_divergent_learning_rate_is_numeric_failure(self, tmp_path):
        corpus = gen_corpus(tmp_path / "c.jsonl")
        import numpy as np
        with np.errstate(all="ignore"):
            code = run("train", "--mode", "SIAMESE", "--train", corpus,
                       "--out", tmp_path / "m.ptm",
                       "--d-tok", 8, "--hidden-width", 16, "--d-out", 8,
                       "--epochs", 2, "--pairs", 100,
                       "--learning-rate", 1e200, "--seed", 6)
        assert code == EXIT_NUMERIC

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert run("train", "--mode", "SIAMESE", "--no-such-flag") == EXIT_USAGE


class TestEvalCommand:
    def test_one_model_two_test_sets(self, tmp_path):
        train = gen_corpus(tmp_path / "train.jsonl", seed=1)
        t1 = gen_corpus(tmp_path / "t1.jsonl", seed=2)
        t2 = gen_corpus(tmp_path / "t2.jsonl", seed=3)
        model = tmp_path / "m.ptm"
        assert run("train", "--mode", "SIAMESE", "--train", train,
                   "--out", model, *SMALL_TRAIN) == EXIT_OK
        report = tmp_path / "r.tsv"
        assert run("eval", "--model", model, "--test", t1, "--test", t2,
                   "--n-pairs", 100, "--seed", 7, "--out", report) == EXIT_OK
        rows = parse_report(report)
        assert len(rows) == 2
        assert [r["test_set"] for r in rows] == ["t1", "t2"]

    def test_eval_is_byte_deterministic(self, tmp_path):
        train = gen_corpus(tmp_path / "train.jsonl", seed=1)
        model = tmp_path / "m.ptm"
        assert run("train", "--mode", "SIAMESE", "--train", train,
                   "--out", model, *SMALL_TRAIN) == EXIT_OK
        r1, r2 = tmp_path / "r1.tsv", tmp_path / "r2.tsv"
        for out in (r1, r2):
            assert run("eval", "--model", model, "--test", train,
                       "--n-pairs", 120, "--seed", 8, "--out", out) == EXIT_OK
        assert r1.read_bytes() == r2.read_bytes()

    def test_orig_over_identical_vectors_gives_zero_delta(self, tmp_path):
        test = gen_corpus(tmp_path / "t.jsonl", classes=3, per_class=5)
        corpus = load_corpus(test)
        vec_path = tmp_path / "v.tsv"
        with open(vec_path, "w") as f:
            f.write("dim=4\n")
            for ex in corpus.examples:
                f.write(f"{ex.id}\t3\t4\t0\t0\n")
        report = tmp_path / "r.tsv"
        assert run("eval", "--orig", "--vectors", vec_path, "--test", test,
                   "--n-pairs", 100, "--seed", 9, "--out", report) == EXIT_OK
        rows = parse_report(report)
        assert rows[0]["model"] == "ORIG"
        assert rows[0]["delta"] == 0.0

    def test_orig_without_vectors_is_usage_error(self, tmp_path):
        test = gen_corpus(tmp_path / "t.jsonl")
        assert run("eval", "--orig", "--test", test,
                   "--out", tmp_path / "r.tsv") == EXIT_USAGE


def experiment_config(tmp_path, **overrides):
    train = gen_corpus(tmp_path / "train.jsonl", classes=4, per_class=40, groups=4, seed=1)
    t1 = gen_corpus(tmp_path / "t1.jsonl", classes=4, per_class=15, groups=4, seed=2)
    t2 = gen_corpus(tmp_path / "t2.jsonl", classes=4, per_class=15, groups=4, seed=3)
    cfg = {
        "name": "tiny",
        "train_sets": [str(train)],
        "test_sets": [str(t1), str(t2)],
        "models": ["ORIG", "NAIVE", "SIAMESE", "ALL"],
        "seed": 5,
        "out_dir": str(tmp_path / "run"),
        "encoder": {"d_tok": 8, "h": 16, "d_out": 8},
        "siamese": {"epochs": 2},
        "naive": {"epochs": 2, "hidden_dim": 16},
        "episodes": {"siamese_pairs": 200, "all_pairs_per_dataset": 100},
        "eval": {"n_pairs": 100},
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


class TestExperimentCommand:
    def test_four_models_two_test_sets_eight_rows(self, tmp_path):
        config, cfg = experiment_config(tmp_path)
        assert run("experiment", "--config", config) == EXIT_OK
        out_dir = tmp_path / "run"
        rows = parse_report(out_dir / "consolidated.tsv")
        assert len(rows) == 8
        assert [r["model"] for r in rows] == [
            "ORIG", "ORIG", "NAIVE", "NAIVE", "SIAMESE", "SIAMESE", "ALL", "ALL",
        ]
        for model in cfg["models"]:
            assert (out_dir / f"{model}.ptm").exists()
        assert not (out_dir / "INCOMPLETE").exists()
        metadata = json.loads((out_dir / "metadata.json").read_text())
        assert "untrained surrogate" in metadata["orig_note"]

    def test_rerun_reproduces_outputs_byte_for_byte(self, tmp_path):
        config, cfg = experiment_config(tmp_path)
        assert run("experiment", "--config", config) == EXIT_OK
        out_dir = tmp_path / "run"
        snapshot = {
            p.name: p.read_bytes() for p in sorted(out_dir.iterdir())
        }
        assert run("experiment", "--config", config) == EXIT_OK
        for p in sorted(out_dir.iterdir()):
            assert p.read_bytes() == snapshot[p.name], p.name

    def test_empty_models_is_usage_error(self, tmp_path):
        config, _ = experiment_config(tmp_path, models=[])
        assert run("experiment", "--config", config) == EXIT_USAGE

    def test_unknown_config_field_is_usage_error(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"no_such_field": 1}))
        assert run("experiment", "--config", config_path) == EXIT_USAGE

    def test_missing_train_set_is_data_error(self, tmp_path):
        config, _ = experiment_config(tmp_path, train_sets=[str(tmp_path / "gone.jsonl")])
        assert run("experiment", "--config", config) == EXIT_DATA

    def test_failed_run_leaves_incomplete_marker(self, tmp_path):
        config, cfg = experiment_config(tmp_path, train_sets=[str(tmp_path / "gone.jsonl")])
        assert run("experiment", "--config", config) == EXIT_DATA
        marker = tmp_path / "run" / "INCOMPLETE"
        assert marker.exists()
        assert "failed" in marker.read_text()


class TestDefaults:
    def test_default_config_snapshot(self):
        cfg = default_experiment_config()
        assert cfg["episodes"]["siamese_pairs"] == 70_000
        assert cfg["episodes"]["all_pairs_per_dataset"] == 10_000
        assert cfg["siamese"]["epochs"] == 30
        assert cfg["naive"]["epochs"] == 30
        assert cfg["naive"]["hidden_dim"] == 128
        assert cfg["encoder"]["d_out"] == 512
        assert cfg["eval"]["n_pairs"] == 5_000
