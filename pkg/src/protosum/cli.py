"""Command-line entry point wiring the whole pipeline.

Subcommands: build-index, make-pairs, train, generate, retrieve, evaluate,
analyze-keywords, plus make-synthetic for the bundled demo corpus. Every
run writes a manifest (config hash, seed, input checksums) next to its
outputs so reruns can be compared byte for byte.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from collections import Counter
from pathlib import Path

from .bm25 import EmptyCorpusError, IndexFormatError, InvertedIndex, build_index
from .corpus import CorpusFormatError, load_corpus, load_split, save_corpus
from .decoding import generate
from .metrics import LengthMismatchError, evaluate, keyword_bucket_analysis, length_breakdown
from .model import ModelConfig
from .prototypes import (
    EmptyIndexError,
    build_eval_instances,
    build_training_instances,
    load_instances,
    retrieve_prototype,
    save_instances,
)
from .tfidf import TfidfRetriever
from .tokenization import tokenize_code, tokenize_summary
from .training import (
    CorruptFileError,
    EmptyDatasetError,
    NonFiniteLossError,
    TrainerConfig,
    VersionMismatchError,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .vocab import build_vocab

DATA_ERRORS = (
    CorpusFormatError,
    IndexFormatError,
    EmptyCorpusError,
    EmptyIndexError,
    EmptyDatasetError,
    VersionMismatchError,
    CorruptFileError,
    NonFiniteLossError,
    LengthMismatchError,
    FileNotFoundError,
    json.JSONDecodeError,
)


class UsageError(Exception):
    pass


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Run configuration file (flat key = value text) with CLI overrides


@dataclasses.dataclass
class RunConfig:
    summary_embed_dim: int = 300
    code_embed_dim: int = 300
    encoder_hidden: int = 512
    decoder_hidden: int = 512
    edit_dim: int = 128
    attn_dim: int | None = None
    dropout: float = 0.5
    max_summary_len: int = 15
    max_code_len: int = 100
    summary_vocab_size: int = 50_000
    code_vocab_size: int = 50_000
    dtype: str = "float32"
    batch_size: int = 512
    initial_lr: float = 0.001
    lr_decay: float = 0.95
    clip_norm: float = 5.0
    max_epochs: int = 30
    patience: int = 5
    k1: float = 1.2
    b: float = 0.75
    top_k: int = 20
    jaccard_min: float = 0.3
    jaccard_max: float = 0.7
    beam_size: int = 10
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path | None) -> "RunConfig":
        config = cls()
        if path is None:
            return config
        fields = {f.name: f for f in dataclasses.fields(cls)}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in fields:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            setattr(config, key, _parse_value(fields[key], value, path, lineno))
        return config

    def canonical_text(self) -> str:
        lines = [
            f"{f.name} = {getattr(self, f.name)}"
            for f in sorted(dataclasses.fields(self), key=lambda f: f.name)
        ]
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    def model_config(self, summary_vocab_size: int, code_vocab_size: int) -> ModelConfig:
        return ModelConfig(
            summary_vocab_size=summary_vocab_size,
            code_vocab_size=code_vocab_size,
            summary_embed_dim=self.summary_embed_dim,
            code_embed_dim=self.code_embed_dim,
            encoder_hidden=self.encoder_hidden,
            decoder_hidden=self.decoder_hidden,
            edit_dim=self.edit_dim,
            attn_dim=self.attn_dim,
            max_summary_len=self.max_summary_len,
            max_code_len=self.max_code_len,
            dropout=self.dropout,
            dtype=self.dtype,
        )

    def trainer_config(self) -> TrainerConfig:
        return TrainerConfig(
            batch_size=self.batch_size,
            initial_lr=self.initial_lr,
            lr_decay=self.lr_decay,
            clip_norm=self.clip_norm,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )


def _parse_value(field: dataclasses.Field, value: str, path, lineno: int):
    try:
        if field.name == "attn_dim":
            return None if value.lower() == "none" else int(value)
        if field.type in ("int", int):
            return int(value)
        if field.type in ("float", float):
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: bad value for {field.name}: {value!r}") from exc


# ---------------------------------------------------------------------------
# Manifest


def _sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(path: Path, command: str, seed, config_hash: str, inputs: dict) -> None:
    manifest = {
        "command": command,
        "seed": seed,
        "config_sha256": config_hash,
        "inputs": {name: _sha256_file(p) for name, p in inputs.items() if p is not None},
    }
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _records_out(path: str | None, records: list[dict]) -> None:
    text = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_build_index(args) -> int:
    split = load_split(args.corpus)
    index = build_index(split, args.field, k1=args.k1, b=args.b)
    index.save(args.out)
    _write_manifest(
        Path(args.out + ".manifest.json"),
        "build-index",
        None,
        hashlib.sha256(f"field={args.field},k1={args.k1},b={args.b}".encode()).hexdigest(),
        {"corpus": args.corpus},
    )
    print(f"indexed {index.n_docs} documents over field {index.field!r} -> {args.out}")
    return 0


def _cmd_make_pairs(args) -> int:
    split = load_split(args.corpus)
    index = InvertedIndex.load(args.index)
    if args.mode == "top1":
        query_split = load_split(args.query_corpus or args.corpus, name="query")
        if index.field != "code":
            raise EmptyIndexError("top1 mode needs an index built over code tokens")
        instances = build_eval_instances(query_split, index, split)
    else:
        if args.query_corpus:
            raise UsageError("--query-corpus only applies to --mode top1")
        instances = build_training_instances(split, index, args.top_k, args.jmin, args.jmax)
    save_instances(instances, args.out)
    _write_manifest(
        Path(args.out + ".manifest.json"),
        "make-pairs",
        None,
        hashlib.sha256(
            f"top_k={args.top_k},jmin={args.jmin},jmax={args.jmax},mode={args.mode}".encode()
        ).hexdigest(),
        {"corpus": args.corpus, "index": args.index, "query_corpus": args.query_corpus},
    )
    print(f"wrote {len(instances)} instances -> {args.out}")
    return 0


def _vocab_sources_from_instances(instances):
    code_by_id: dict[str, tuple[str, ...]] = {}
    summary_by_id: dict[str, tuple[str, ...]] = {}
    for inst in instances:
        code_by_id.setdefault(inst.src_id, inst.x)
        summary_by_id.setdefault(inst.src_id, inst.y)
        code_by_id.setdefault(inst.proto_id, inst.x_prime)
        summary_by_id.setdefault(inst.proto_id, inst.y_prime)
    ids = sorted(code_by_id)
    return [code_by_id[i] for i in ids], [summary_by_id[i] for i in ids]


def _cmd_train(args) -> int:
    config = RunConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    train_instances = load_instances(args.pairs)
    valid_instances = load_instances(args.valid)
    if args.corpus:
        corpus_split = load_split(args.corpus, max_code_len=config.max_code_len,
                                  max_summary_len=config.max_summary_len)
        code_texts = [p.code_tokens for p in corpus_split]
        summary_texts = [p.summary_tokens for p in corpus_split]
    else:
        code_texts, summary_texts = _vocab_sources_from_instances(train_instances)
    code_vocab = build_vocab(code_texts, config.code_vocab_size)
    summary_vocab = build_vocab(summary_texts, config.summary_vocab_size)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(config.canonical_text(), encoding="utf-8")

    log_lines: list[str] = []

    def progress(log):
        line = json.dumps(
            {
                "epoch": log.epoch,
                "lr": log.lr,
                "train_loss": log.train_loss,
                "valid_loss": log.valid_loss,
            },
            sort_keys=True,
        )
        log_lines.append(line)
        print(line)

    result = train(
        train_instances,
        valid_instances,
        config.model_config(len(summary_vocab), len(code_vocab)),
        config.trainer_config(),
        code_vocab,
        summary_vocab,
        progress=progress,
    )
    (out_dir / "training_log.jsonl").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    save_checkpoint(result.checkpoint, out_dir / "checkpoint.bin")
    _write_manifest(
        out_dir / "manifest.json",
        "train",
        config.seed,
        config.hash(),
        {"pairs": args.pairs, "valid": args.valid, "corpus": args.corpus},
    )
    best = result.checkpoint
    print(f"best epoch {best.epoch} valid loss {best.best_valid_loss:.6f} -> {out_dir / 'checkpoint.bin'}")
    return 0


def _cmd_generate(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    index = InvertedIndex.load(args.index)
    if index.field != "code":
        raise EmptyIndexError("generation needs an index built over code tokens")
    config = checkpoint.model_config
    train_split = load_split(args.corpus, max_code_len=config.max_code_len,
                             max_summary_len=config.max_summary_len)
    inputs = load_corpus(args.input)
    records = []
    for pair in inputs:
        tokens = tokenize_code(pair.code_text, config.max_code_len)
        result = generate(
            tokens, index, train_split, checkpoint,
            beam_size=args.beam, max_len=args.max_len,
        )
        records.append(
            {
                "id": pair.id,
                "code": pair.code_text,
                "summary": pair.summary_text,
                "generated": " ".join(result.tokens),
                "proto_id": result.proto_id,
            }
        )
    _records_out(args.out, records)
    _write_manifest(
        Path(args.out + ".manifest.json"),
        "generate",
        None,
        hashlib.sha256(f"beam={args.beam},max_len={args.max_len}".encode()).hexdigest(),
        {"checkpoint": args.checkpoint, "index": args.index, "corpus": args.corpus,
         "input": args.input},
    )
    print(f"generated {len(records)} summaries -> {args.out}")
    return 0


def _cmd_retrieve(args) -> int:
    train_split = load_split(args.corpus)
    inputs = load_corpus(args.input)
    records = []
    if args.method == "bm25":
        index = build_index(train_split, "code", k1=args.k1, b=args.b)
        def pick(tokens):
            return retrieve_prototype(index, train_split, tokens)
    else:
        retriever = TfidfRetriever(train_split)
        if args.method == "vsm":
            def pick(tokens):
                return retriever.retrieve(tokens)
        else:
            def pick(tokens):
                return retriever.retrieve_by_bleu(tokens, args.k)
    for pair in inputs:
        tokens = tokenize_code(pair.code_text)
        proto_id, summary = pick(tokens)
        records.append(
            {
                "id": pair.id,
                "code": pair.code_text,
                "summary": pair.summary_text,
                "generated": " ".join(summary),
                "proto_id": proto_id,
            }
        )
    _records_out(args.out, records)
    if args.out is not None:
        _write_manifest(
            Path(args.out + ".manifest.json"),
            "retrieve",
            None,
            hashlib.sha256(f"method={args.method},k={args.k}".encode()).hexdigest(),
            {"corpus": args.corpus, "input": args.input},
        )
    return 0


def _load_generated(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            record = json.loads(line)
            if "generated" not in record:
                raise CorpusFormatError(f"{path}:{lineno}: missing 'generated' field")
            records.append(record)
    return records


def _cmd_evaluate(args) -> int:
    generated = _load_generated(args.generated)
    references = load_corpus(args.references)
    if len(generated) != len(references):
        raise LengthMismatchError(
            f"{args.generated} has {len(generated)} records but "
            f"{args.references} has {len(references)}"
        )
    candidates = [tokenize_summary(r["generated"]) for r in generated]
    refs = [tokenize_summary(p.summary_text) for p in references]
    report = evaluate(candidates, refs).to_dict()
    code_lengths = [len(tokenize_code(p.code_text)) for p in references]
    report["by_code_length"] = length_breakdown(candidates, refs, code_lengths, bin_width=10)
    report["by_summary_length"] = length_breakdown(
        candidates, refs, [len(r) for r in refs], bin_width=3
    )
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        _write_manifest(
            Path(args.out + ".manifest.json"),
            "evaluate",
            None,
            hashlib.sha256(b"evaluate").hexdigest(),
            {"generated": args.generated, "references": args.references},
        )
    return 0


def _cmd_analyze_keywords(args) -> int:
    generated = _load_generated(args.generated)
    references = load_corpus(args.references)
    if len(generated) != len(references):
        raise LengthMismatchError(
            f"{args.generated} has {len(generated)} records but "
            f"{args.references} has {len(references)}"
        )
    train_pairs = load_corpus(args.train_corpus)
    freq = Counter()
    for pair in train_pairs:
        freq.update(tokenize_summary(pair.summary_text))
    report = keyword_bucket_analysis(
        [tokenize_summary(r["generated"]) for r in generated],
        [tokenize_summary(p.summary_text) for p in references],
        freq,
    )
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def _cmd_make_synthetic(args) -> int:
    from .synthetic import make_synthetic_corpus

    n_rare = args.n_rare if args.n_rare is not None else max(1, args.n_train // 20)
    splits = make_synthetic_corpus(
        n_train=args.n_train,
        n_valid=args.n_valid,
        n_test=args.n_test,
        seed=args.seed,
        n_rare=n_rare,
        rare_train_occurrences=args.rare_occurrences,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, pairs in splits.items():
        save_corpus(pairs, out_dir / f"{name}.jsonl")
        print(f"wrote {len(pairs)} pairs -> {out_dir / f'{name}.jsonl'}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="protosum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="build a BM25 index over a corpus field")
    p.add_argument("--corpus", required=True)
    p.add_argument("--field", required=True, choices=["code", "summary"])
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(func=_cmd_build_index)

    p = sub.add_parser("make-pairs", help="construct training or evaluation instances")
    p.add_argument("--corpus", required=True, help="corpus the index was built over")
    p.add_argument("--index", required=True)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--jmin", type=float, default=0.3)
    p.add_argument("--jmax", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["filtered", "top1"], default="filtered")
    p.add_argument("--query-corpus", default=None,
                   help="corpus to build instances for (top1 mode; defaults to --corpus)")
    p.set_defaults(func=_cmd_make_pairs)

    p = sub.add_parser("train", help="train the edit model")
    p.add_argument("--pairs", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--corpus", default=None, help="corpus for vocabulary building")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("generate", help="generate summaries with a trained model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--beam", type=int, default=10)
    p.add_argument("--max-len", type=int, default=15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("retrieve", help="run a retrieval-only baseline")
    p.add_argument("--method", required=True, choices=["bm25", "vsm", "nngen"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("evaluate", help="score generated summaries against references")
    p.add_argument("--generated", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("analyze-keywords", help="low-frequency keyword bucket analysis")
    p.add_argument("--generated", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--train-corpus", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_analyze_keywords)

    p = sub.add_parser("make-synthetic", help="write the bundled synthetic demo corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-valid", type=int, default=100)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-rare", type=int, default=None,
                   help="rare filler words (default: n_train / 20)")
    p.add_argument("--rare-occurrences", type=int, default=5)
    p.set_defaults(func=_cmd_make_synthetic)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (*DATA_ERRORS, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
