"""Scikit-learn style estimators over the retrieval and editing pipeline.

All estimators fit on parallel sequences of raw code strings ``X`` and
summary strings ``y``, and predict space-joined summary strings. They
follow the usual conventions (constructor stores parameters verbatim,
fitted state lives in trailing-underscore attributes, ``get_params`` /
``set_params`` / ``clone`` work), so they compose with pipelines and
model-selection utilities.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bm25 import build_index
from .corpus import RawPair, make_split
from .decoding import generate
from .metrics import corpus_bleu
from .model import ModelConfig
from .prototypes import (
    build_eval_instances,
    build_training_instances,
    retrieve_prototype,
)
from .tfidf import TfidfRetriever
from .tokenization import tokenize_code, tokenize_summary
from .training import TrainerConfig, train
from .validation import check_text_pairs, check_texts, pair_ids
from .vocab import build_vocab


class _RetrievalSummarizer(BaseEstimator):
    """Shared corpus handling for the retrieval-only baselines."""

    max_code_len: int
    max_summary_len: int

    def _fit_split(self, X, y):
        codes, summaries = check_text_pairs(X, y)
        raw = [
            RawPair(id=pid, code_text=c, summary_text=s)
            for pid, c, s in zip(pair_ids(len(codes)), codes, summaries)
        ]
        self.train_split_ = make_split("train", raw, self.max_code_len, self.max_summary_len)
        return self

    def _predict_tokens(self, X) -> list[tuple[str, ...]]:
        raise NotImplementedError

    def predict(self, X) -> list[str]:
        check_is_fitted(self, "train_split_")
        return [" ".join(tokens) for tokens in self._predict_tokens(X)]

    def score(self, X, y) -> float:
        """Corpus BLEU-4 (percent) of predictions against references."""
        codes, summaries = check_text_pairs(X, y)
        candidates = self._predict_tokens(codes)
        references = [tokenize_summary(s, self.max_summary_len) for s in summaries]
        return corpus_bleu(candidates, references)[3]


class RetrieveSummarizer(_RetrievalSummarizer):
    """Return the summary of the BM25-nearest training code verbatim."""

    def __init__(self, k1: float = 1.2, b: float = 0.75, max_code_len: int = 100,
                 max_summary_len: int = 15):
        self.k1 = k1
        self.b = b
        self.max_code_len = max_code_len
        self.max_summary_len = max_summary_len

    def fit(self, X, y):
        self._fit_split(X, y)
        self.code_index_ = build_index(self.train_split_, "code", k1=self.k1, b=self.b)
        return self

    def _predict_tokens(self, X):
        out = []
        for code in check_texts(X):
            tokens = tokenize_code(code, self.max_code_len)
            _, summary = retrieve_prototype(self.code_index_, self.train_split_, tokens)
            out.append(summary)
        return out


class VsmSummarizer(_RetrievalSummarizer):
    """Return the summary of the TF-IDF cosine-nearest training code."""

    def __init__(self, max_code_len: int = 100, max_summary_len: int = 15):
        self.max_code_len = max_code_len
        self.max_summary_len = max_summary_len

    def fit(self, X, y):
        self._fit_split(X, y)
        self.retriever_ = TfidfRetriever(self.train_split_)
        return self

    def _predict_tokens(self, X):
        out = []
        for code in check_texts(X):
            tokens = tokenize_code(code, self.max_code_len)
            _, summary = self.retriever_.retrieve(tokens)
            out.append(summary)
        return out


class NNGenSummarizer(_RetrievalSummarizer):
    """Rerank the k cosine-nearest codes by sentence BLEU and return the winner's summary."""

    def __init__(self, k: int = 5, max_code_len: int = 100, max_summary_len: int = 15):
        self.k = k
        self.max_code_len = max_code_len
        self.max_summary_len = max_summary_len

    def fit(self, X, y):
        self._fit_split(X, y)
        self.retriever_ = TfidfRetriever(self.train_split_)
        return self

    def _predict_tokens(self, X):
        out = []
        for code in check_texts(X):
            tokens = tokenize_code(code, self.max_code_len)
            _, summary = self.retriever_.retrieve_by_bleu(tokens, self.k)
            out.append(summary)
        return out


class PrototypeEditingSummarizer(_RetrievalSummarizer):
    """Retrieve-and-edit summarizer: BM25 prototype retrieval plus a trained
    edit-vector seq2seq decoder.

    Defaults mirror the documented full-scale configuration; call
    :meth:`desk` for CPU-sized dimensions.
    """

    def __init__(
        self,
        summary_embed_dim: int = 300,
        code_embed_dim: int = 300,
        encoder_hidden: int = 512,
        decoder_hidden: int = 512,
        edit_dim: int = 128,
        attn_dim: int | None = None,
        dropout: float = 0.5,
        max_code_len: int = 100,
        max_summary_len: int = 15,
        code_vocab_size: int = 50_000,
        summary_vocab_size: int = 50_000,
        top_k: int = 20,
        jaccard_min: float = 0.3,
        jaccard_max: float = 0.7,
        k1: float = 1.2,
        b: float = 0.75,
        batch_size: int = 512,
        learning_rate: float = 0.001,
        lr_decay: float = 0.95,
        clip_norm: float = 5.0,
        max_epochs: int = 30,
        patience: int = 5,
        beam_size: int = 10,
        validation_fraction: float = 0.1,
        seed: int = 0,
    ):
        self.summary_embed_dim = summary_embed_dim
        self.code_embed_dim = code_embed_dim
        self.encoder_hidden = encoder_hidden
        self.decoder_hidden = decoder_hidden
        self.edit_dim = edit_dim
        self.attn_dim = attn_dim
        self.dropout = dropout
        self.max_code_len = max_code_len
        self.max_summary_len = max_summary_len
        self.code_vocab_size = code_vocab_size
        self.summary_vocab_size = summary_vocab_size
        self.top_k = top_k
        self.jaccard_min = jaccard_min
        self.jaccard_max = jaccard_max
        self.k1 = k1
        self.b = b
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.clip_norm = clip_norm
        self.max_epochs = max_epochs
        self.patience = patience
        self.beam_size = beam_size
        self.validation_fraction = validation_fraction
        self.seed = seed

    @classmethod
    def desk(cls, **overrides) -> "PrototypeEditingSummarizer":
        """CPU-sized preset: small dimensions, batch 32."""
        base = dict(
            summary_embed_dim=64,
            code_embed_dim=64,
            encoder_hidden=128,
            decoder_hidden=128,
            edit_dim=64,
            batch_size=32,
        )
        base.update(overrides)
        return cls(**base)

    def fit(self, X, y, X_valid=None, y_valid=None):
        """Build indexes and vocabularies, construct instances, train.

        Without an explicit validation set, ``validation_fraction`` of the
        pairs (seeded split) is held out for early stopping; the retrieval
        corpus is always the full training portion.
        """
        codes, summaries = check_text_pairs(X, y)
        if X_valid is None:
            rng = np.random.default_rng(self.seed)
            order = rng.permutation(len(codes))
            n_valid = max(1, int(round(len(codes) * self.validation_fraction)))
            if n_valid >= len(codes):
                raise ValueError("validation_fraction leaves no training pairs")
            valid_idx = set(order[:n_valid].tolist())
            train_codes = [codes[i] for i in range(len(codes)) if i not in valid_idx]
            train_summaries = [summaries[i] for i in range(len(codes)) if i not in valid_idx]
            valid_codes = [codes[i] for i in sorted(valid_idx)]
            valid_summaries = [summaries[i] for i in sorted(valid_idx)]
        else:
            train_codes, train_summaries = codes, summaries
            valid_codes, valid_summaries = check_text_pairs(X_valid, y_valid)

        train_ids = pair_ids(len(train_codes))
        raw_train = [
            RawPair(id=f"t{pid}", code_text=c, summary_text=s)
            for pid, c, s in zip(train_ids, train_codes, train_summaries)
        ]
        raw_valid = [
            RawPair(id=f"v{pid}", code_text=c, summary_text=s)
            for pid, c, s in zip(pair_ids(len(valid_codes)), valid_codes, valid_summaries)
        ]
        self.train_split_ = make_split("train", raw_train, self.max_code_len, self.max_summary_len)
        valid_split = make_split("valid", raw_valid, self.max_code_len, self.max_summary_len)

        self.code_vocab_ = build_vocab(
            (p.code_tokens for p in self.train_split_), self.code_vocab_size
        )
        self.summary_vocab_ = build_vocab(
            (p.summary_tokens for p in self.train_split_), self.summary_vocab_size
        )
        summary_index = build_index(self.train_split_, "summary", k1=self.k1, b=self.b)
        self.code_index_ = build_index(self.train_split_, "code", k1=self.k1, b=self.b)
        train_instances = build_training_instances(
            self.train_split_, summary_index, self.top_k, self.jaccard_min, self.jaccard_max
        )
        valid_instances = build_eval_instances(valid_split, self.code_index_, self.train_split_)

        model_config = ModelConfig(
            summary_vocab_size=len(self.summary_vocab_),
            code_vocab_size=len(self.code_vocab_),
            summary_embed_dim=self.summary_embed_dim,
            code_embed_dim=self.code_embed_dim,
            encoder_hidden=self.encoder_hidden,
            decoder_hidden=self.decoder_hidden,
            edit_dim=self.edit_dim,
            attn_dim=self.attn_dim,
            max_summary_len=self.max_summary_len,
            max_code_len=self.max_code_len,
            dropout=self.dropout,
        )
        trainer_config = TrainerConfig(
            batch_size=self.batch_size,
            initial_lr=self.learning_rate,
            lr_decay=self.lr_decay,
            clip_norm=self.clip_norm,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )
        result = train(
            train_instances,
            valid_instances,
            model_config,
            trainer_config,
            self.code_vocab_,
            self.summary_vocab_,
        )
        self.checkpoint_ = result.checkpoint
        self.history_ = result.history
        return self

    def _predict_tokens(self, X):
        check_is_fitted(self, "checkpoint_")
        out = []
        for code in check_texts(X):
            tokens = tokenize_code(code, self.max_code_len)
            result = generate(
                tokens,
                self.code_index_,
                self.train_split_,
                self.checkpoint_,
                beam_size=self.beam_size,
            )
            out.append(result.tokens)
        return out
