import json
from pathlib import Path

import pytest

from protosum.cli import RunConfig, ConfigError, dispatch


def run(argv):
    return dispatch(argv)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A small synthetic corpus shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    assert run([
        "make-synthetic", "--out-dir", str(root / "data"),
        "--n-train", "50", "--n-valid", "8", "--n-test", "6", "--seed", "13",
    ]) == 0
    return root


def desk_config(path: Path, **extra) -> Path:
    values = dict(
        summary_embed_dim=16, code_embed_dim=16, encoder_hidden=12,
        decoder_hidden=12, edit_dim=8, dropout=0.0, batch_size=16,
        max_epochs=2, patience=5,
    )
    values.update(extra)
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()))
    return path


def test_full_pipeline(workspace):
    root = workspace
    data = root / "data"
    assert run([
        "build-index", "--corpus", str(data / "train.jsonl"),
        "--field", "summary", "--out", str(root / "summary.idx"),
    ]) == 0
    assert run([
        "build-index", "--corpus", str(data / "train.jsonl"),
        "--field", "code", "--out", str(root / "code.idx"),
    ]) == 0
    assert run([
        "make-pairs", "--corpus", str(data / "train.jsonl"),
        "--index", str(root / "summary.idx"), "--top-k", "20",
        "--jmin", "0.3", "--jmax", "0.7", "--out", str(root / "train_pairs.jsonl"),
    ]) == 0
    assert run([
        "make-pairs", "--corpus", str(data / "train.jsonl"),
        "--index", str(root / "code.idx"), "--mode", "top1",
        "--query-corpus", str(data / "valid.jsonl"),
        "--out", str(root / "valid_pairs.jsonl"),
    ]) == 0
    config = desk_config(root / "desk.cfg")
    assert run([
        "train", "--pairs", str(root / "train_pairs.jsonl"),
        "--valid", str(root / "valid_pairs.jsonl"), "--config", str(config),
        "--out-dir", str(root / "run1"), "--seed", "7",
        "--corpus", str(data / "train.jsonl"),
    ]) == 0
    assert (root / "run1" / "checkpoint.bin").exists()
    assert (root / "run1" / "manifest.json").exists()
    assert (root / "run1" / "config.txt").exists()
    assert run([
        "generate", "--checkpoint", str(root / "run1" / "checkpoint.bin"),
        "--index", str(root / "code.idx"), "--corpus", str(data / "train.jsonl"),
        "--input", str(data / "test.jsonl"), "--beam", "3", "--max-len", "15",
        "--out", str(root / "generated.jsonl"),
    ]) == 0
    records = [json.loads(l) for l in (root / "generated.jsonl").read_text().splitlines()]
    assert len(records) == 6
    assert all("generated" in r and "proto_id" in r for r in records)
    assert run([
        "evaluate", "--generated", str(root / "generated.jsonl"),
        "--references", str(data / "test.jsonl"), "--out", str(root / "report.json"),
    ]) == 0
    report = json.loads((root / "report.json").read_text())
    assert 0.0 <= report["bleu1"] <= 100.0
    assert "by_code_length" in report and "by_summary_length" in report
    assert run([
        "analyze-keywords", "--generated", str(root / "generated.jsonl"),
        "--references", str(data / "test.jsonl"),
        "--train-corpus", str(data / "train.jsonl"),
        "--out", str(root / "keywords.json"),
    ]) == 0
    buckets = json.loads((root / "keywords.json").read_text())
    assert set(buckets) == {"10", "20", "50", "100"}


def test_retrieve_methods(workspace, capsys):
    root = workspace
    data = root / "data"
    for method in ("bm25", "vsm", "nngen"):
        out = root / f"retrieved_{method}.jsonl"
        assert run([
            "retrieve", "--method", method, "--corpus", str(data / "train.jsonl"),
            "--input", str(data / "test.jsonl"), "--out", str(out),
        ]) == 0
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(records) == 6
        assert all(r["generated"] for r in records)


def test_seeded_train_runs_are_byte_identical(workspace):
    root = workspace
    config = desk_config(root / "repro.cfg", max_epochs=1)
    for name in ("rep1", "rep2"):
        assert run([
            "train", "--pairs", str(root / "train_pairs.jsonl"),
            "--valid", str(root / "valid_pairs.jsonl"), "--config", str(config),
            "--out-dir", str(root / name), "--seed", "21",
        ]) == 0
    for artifact in ("checkpoint.bin", "training_log.jsonl", "manifest.json", "config.txt"):
        assert (root / "rep1" / artifact).read_bytes() == (root / "rep2" / artifact).read_bytes()


def test_evaluate_count_mismatch_is_data_error(workspace, tmp_path, capsys):
    root = workspace
    data = root / "data"
    short = tmp_path / "short.jsonl"
    lines = (root / "generated.jsonl").read_text().splitlines()
    short.write_text("\n".join(lines[:3]) + "\n")
    code = run([
        "evaluate", "--generated", str(short), "--references", str(data / "test.jsonl"),
    ])
    assert code == 2
    err = capsys.readouterr().err
    assert "3" in err and "6" in err


def test_usage_errors_exit_one(capsys):
    assert run(["no-such-command"]) == 1
    assert run(["build-index", "--corpus", "x"]) == 1  # missing required args
    assert run([]) == 1


def test_missing_file_is_data_error(tmp_path):
    assert run([
        "build-index", "--corpus", str(tmp_path / "absent.jsonl"),
        "--field", "code", "--out", str(tmp_path / "o.idx"),
    ]) == 2


def test_run_config_parsing(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("batch_size = 64\nattn_dim = none\n# comment\ndropout = 0.25\n")
    config = RunConfig.from_file(path)
    assert config.batch_size == 64
    assert config.attn_dim is None
    assert config.dropout == 0.25
    assert "batch_size = 64" in config.canonical_text()
    assert config.hash() == RunConfig.from_file(path).hash()


def test_run_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("not_a_real_key = 3\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)
    assert run([
        "train", "--pairs", "x", "--valid", "y", "--config", str(path),
        "--out-dir", str(tmp_path / "out"),
    ]) == 2


def test_run_config_rejects_bad_values(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("batch_size = many\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)
    path.write_text("batch_size 64\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)
