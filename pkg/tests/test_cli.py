"""Tests for the command-line surface: exit codes, config merging, and the
output layout of every subcommand."""

import json

import numpy as np
import pytest

from sencore.cli import main
from sencore.tokenizer import build_vocab

_SENTENCES = [
    "the cat sat on the mat",
    "a cat sat near the mat",
    "the dog ran in the park",
    "a dog ran to the park",
    "the bird flew over the lake",
    "a bird flew past the lake",
    "the cat ran to the park",
    "a dog sat on the mat",
    "the bird sat near the lake",
    "a cat flew past the park",
    "the dog sat over the mat",
    "a bird ran in the lake",
    "the cat flew to the mat",
    "a dog flew near the park",
    "the bird ran on the lake",
    "a cat ran over the mat",
]

_DEV_ROWS = [
    (5.0, "the cat sat on the mat", "a cat sat near the mat"),
    (4.0, "the dog ran in the park", "a dog ran to the park"),
    (3.0, "the bird flew over the lake", "a bird flew past the lake"),
    (2.0, "the cat sat on the mat", "the cat ran to the park"),
    (1.0, "a dog ran to the park", "the bird sat near the lake"),
    (0.0, "the cat sat on the mat", "a bird ran in the lake"),
]


def _write_inputs(root):
    corpus = root / "corpus.txt"
    corpus.write_text("\n".join(_SENTENCES) + "\n")
    dev = root / "dev.tsv"
    dev.write_text("".join(f"{g}\t{a}\t{b}\n" for g, a, b in _DEV_ROWS))
    return corpus, dev


_MODEL_FLAGS = [
    "--layers", "1", "--dim", "16", "--heads", "2", "--max-len", "12",
    "--batch-size", "4", "--eval-every", "2", "--seed", "0", "--lr", "1e-3",
]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """One small trained model shared by the read-only subcommand tests."""
    root = tmp_path_factory.mktemp("cli_model")
    corpus, dev = _write_inputs(root)
    out_dir = root / "run"
    code = main(
        ["train", "--corpus", str(corpus), "--dev", str(dev), "--out-dir", str(out_dir)]
        + _MODEL_FLAGS
    )
    assert code == 0
    return {
        "root": root,
        "corpus": corpus,
        "dev": dev,
        "checkpoint": out_dir / "checkpoint.bin",
        "out_dir": out_dir,
    }


class TestExitCodes:
    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert main(["train", "--help"]) == 0
        capsys.readouterr()

    def test_no_subcommand_is_a_usage_error(self, capsys):
        assert main([]) == 1
        capsys.readouterr()

    def test_train_without_corpus_is_a_usage_error(self, tmp_path, capsys):
        _, dev = _write_inputs(tmp_path)
        assert main(["train", "--dev", str(dev)]) == 1
        assert "corpus" in capsys.readouterr().err

    def test_invalid_option_value_exit_one(self, tmp_path, capsys):
        corpus, dev = _write_inputs(tmp_path)
        code = main(["train", "--corpus", str(corpus), "--dev", str(dev), "--batch-size", "0"])
        assert code == 1
        capsys.readouterr()

    def test_missing_data_file_exit_two(self, tmp_path, capsys):
        _, dev = _write_inputs(tmp_path)
        code = main(["train", "--corpus", str(tmp_path / "absent.txt"), "--dev", str(dev)])
        assert code == 2
        capsys.readouterr()

    def test_missing_checkpoint_exit_two(self, tmp_path, capsys):
        _, dev = _write_inputs(tmp_path)
        assert main(["eval", str(tmp_path / "no.bin"), str(dev)]) == 2
        capsys.readouterr()


class TestTrainCommand:
    def test_reports_baseline_and_best(self, trained, capsys):
        """Re-train into a fresh directory and inspect the summary lines."""
        out_dir = trained["root"] / "second"
        code = main(
            ["train", "--corpus", str(trained["corpus"]), "--dev", str(trained["dev"]),
             "--out-dir", str(out_dir)] + _MODEL_FLAGS
        )
        out = capsys.readouterr().out
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("baseline dev spearman\t")
        assert lines[1].startswith("best step\t")
        assert lines[2].startswith("best dev spearman\t")
        assert lines[3].startswith("checkpoint\t")
        for name in ("checkpoint.bin", "checkpoint.momentum.bin", "vocab.txt", "trainlog.tsv"):
            assert (out_dir / name).exists()

    def test_config_file_applies_and_flags_override(self, tmp_path, capsys):
        """batch_size from the file drives the step count unless a flag
        overrides it."""
        corpus, dev = _write_inputs(tmp_path)
        cfg = tmp_path / "train.cfg"
        cfg.write_text(
            "batch_size = 8   # sixteen sentences, two steps\n"
            "\n"
            "layers = 1\ndim = 16\nheads = 2\nmax_len = 12\n"
            "eval_every = 10\nlearning_rate = 1e-3\nseed = 0\n"
        )
        out_a = tmp_path / "a"
        code = main(["train", "--corpus", str(corpus), "--dev", str(dev),
                     "--config", str(cfg), "--out-dir", str(out_a)])
        assert code == 0
        assert len((out_a / "trainlog.tsv").read_text().splitlines()) == 2

        out_b = tmp_path / "b"
        code = main(["train", "--corpus", str(corpus), "--dev", str(dev),
                     "--config", str(cfg), "--out-dir", str(out_b), "--batch-size", "4"])
        assert code == 0
        assert len((out_b / "trainlog.tsv").read_text().splitlines()) == 4
        capsys.readouterr()

    def test_unknown_config_key_exit_two(self, tmp_path, capsys):
        corpus, dev = _write_inputs(tmp_path)
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("warmup = 10\n")
        code = main(["train", "--corpus", str(corpus), "--dev", str(dev), "--config", str(cfg)])
        assert code == 2
        assert "warmup" in capsys.readouterr().err


class TestEvalCommand:
    def test_prints_per_dataset_and_average(self, trained, capsys):
        code = main(["eval", str(trained["checkpoint"]), str(trained["dev"]), str(trained["dev"])])
        out = capsys.readouterr().out
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 3
        values = []
        for line in lines[:2]:
            path, value = line.split("\t")
            assert path == str(trained["dev"])
            values.append(float(value))
        label, avg = lines[2].split("\t")
        assert label == "Avg."
        np.testing.assert_allclose(float(avg), np.mean(values), atol=1e-6)
        assert all(-1.0 <= v <= 1.0 for v in values)

    def test_mismatched_vocab_exit_two(self, trained, tmp_path, capsys):
        other = build_vocab(["totally different words here"], 40)
        vocab_path = tmp_path / "other.txt"
        other.save(vocab_path)
        code = main(["eval", str(trained["checkpoint"]), str(trained["dev"]),
                     "--vocab", str(vocab_path)])
        assert code == 2
        assert "hash" in capsys.readouterr().err


class TestAuditCommand:
    def test_text_layout(self, trained, capsys):
        code = main(["audit", str(trained["checkpoint"]), str(trained["dev"])])
        out = capsys.readouterr().out
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "group\tpairs\tspearman"
        assert lines[1].startswith("len_diff<=3\t")
        assert lines[2].startswith("len_diff>3\t")

    def test_json_layout_with_undefined_group(self, trained, capsys):
        """The toy dev set has near-equal lengths everywhere, so the large
        group is empty and its correlation is null."""
        code = main(["audit", str(trained["checkpoint"]), str(trained["dev"]), "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["threshold"] == 3
        assert payload["small"]["pairs"] == len(_DEV_ROWS)
        assert payload["large"] == {"pairs": 0, "spearman": None}

    def test_threshold_flag_changes_the_split_label(self, trained, capsys):
        code = main(["audit", str(trained["checkpoint"]), str(trained["dev"]),
                     "--threshold", "0"])
        out = capsys.readouterr().out
        assert code == 0
        assert "len_diff<=0\t" in out
        assert "len_diff>0\t" in out


class TestEmbedCommand:
    def test_writes_a_matrix(self, trained, tmp_path, capsys):
        sentences = tmp_path / "sentences.txt"
        sentences.write_text("the cat sat\n\na dog ran\n")
        out_path = tmp_path / "vectors.tsv"
        code = main(["embed", str(trained["checkpoint"]), str(sentences),
                     "--out", str(out_path)])
        assert code == 0
        assert "wrote 2 x 16" in capsys.readouterr().out
        rows = out_path.read_text().strip().split("\n")
        matrix = np.array([[float(v) for v in row.split("\t")] for row in rows])
        assert matrix.shape == (2, 16)
        assert np.all(np.isfinite(matrix))

    def test_output_is_deterministic(self, trained, tmp_path, capsys):
        sentences = tmp_path / "sentences.txt"
        sentences.write_text("the bird flew\n")
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        assert main(["embed", str(trained["checkpoint"]), str(sentences), "--out", str(a)]) == 0
        assert main(["embed", str(trained["checkpoint"]), str(sentences), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        capsys.readouterr()

    def test_empty_sentence_file_exit_two(self, trained, tmp_path, capsys):
        empty = tmp_path / "empty.txt"
        empty.write_text("\n\n")
        out_path = tmp_path / "v.tsv"
        assert main(["embed", str(trained["checkpoint"]), str(empty), "--out", str(out_path)]) == 2
        capsys.readouterr()


class TestAugmentPreview:
    def test_none_strategy_echoes_the_sentence(self, capsys):
        code = main(["augment-preview", "--sentence", "The Cat Sat", "--strategy", "none"])
        out = capsys.readouterr().out
        assert code == 0
        assert out == "the cat sat\n"

    def test_repetition_is_seeded_and_lengthening(self, capsys):
        argv = ["augment-preview", "--sentence", "the cat sat on the mat",
                "--dup-rate", "1.0", "--seed", "3"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second
        words = first.strip().split(" ")
        base = "the cat sat on the mat".split(" ")
        assert len(words) >= len(base)
        it = iter(words)
        assert all(w in it for w in base)

    def test_explicit_vocab_controls_segmentation(self, tmp_path, capsys):
        vocab = build_vocab(["cat"] * 3, target_size=8)  # alphabet only
        path = tmp_path / "tiny.txt"
        vocab.save(path)
        code = main(["augment-preview", "--sentence", "cat", "--strategy", "none",
                     "--vocab", str(path)])
        out = capsys.readouterr().out
        assert code == 0
        assert out == "c ##a ##t\n"

    def test_stopword_insertion_uses_bundled_list(self, capsys):
        grew = False
        for seed in range(10):
            code = main(["augment-preview", "--sentence", "cats chase mice",
                         "--strategy", "insert-stopword", "--dup-rate", "1.0",
                         "--seed", str(seed)])
            assert code == 0
            words = capsys.readouterr().out.strip().split(" ")
            if len(words) > 3:
                grew = True
        assert grew
