"""Retrieve-and-edit code summarization laboratory."""

from .bm25 import InvertedIndex, RetrievalHit, build_index
from .corpus import DatasetSplit, RawPair, TokenizedPair, load_corpus, load_split, make_split, save_corpus
from .decoding import BeamHypothesis, DecodedSequence, GenerationResult, beam_search, beam_search_core, generate
from .estimators import (
    NNGenSummarizer,
    PrototypeEditingSummarizer,
    RetrieveSummarizer,
    VsmSummarizer,
)
from .metrics import (
    EvalReport,
    KeywordBucketReport,
    MeteorConfig,
    bleu,
    corpus_bleu,
    evaluate,
    keyword_bucket_analysis,
    lcs_length,
    meteor,
    rouge_l,
    rouge_w,
    sentence_bleu,
)
from .model import (
    EncodedInstance,
    EncoderOutput,
    ModelConfig,
    ModelParameters,
    compute_diff_sets,
    compute_edit_vector,
    encode_instance,
    encode_prototype,
    forward_loss,
)
from .prototypes import (
    TrainingInstance,
    build_eval_instances,
    build_training_instances,
    jaccard,
    load_instances,
    retrieve_prototype,
    save_instances,
)
from .synthetic import make_synthetic_corpus
from .tfidf import TfidfRetriever, nngen_select, vsm_retrieve
from .tokenization import tokenize_code, tokenize_summary
from .training import (
    Checkpoint,
    TrainerConfig,
    TrainResult,
    evaluate_loss,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .vocab import Vocabulary, build_vocab

__version__ = "0.1.0"

__all__ = [
    "BeamHypothesis",
    "Checkpoint",
    "DatasetSplit",
    "DecodedSequence",
    "EncodedInstance",
    "EncoderOutput",
    "EvalReport",
    "GenerationResult",
    "InvertedIndex",
    "KeywordBucketReport",
    "MeteorConfig",
    "ModelConfig",
    "ModelParameters",
    "NNGenSummarizer",
    "PrototypeEditingSummarizer",
    "RawPair",
    "RetrievalHit",
    "RetrieveSummarizer",
    "TfidfRetriever",
    "TokenizedPair",
    "TrainResult",
    "TrainerConfig",
    "TrainingInstance",
    "VsmSummarizer",
    "Vocabulary",
    "beam_search",
    "beam_search_core",
    "bleu",
    "build_eval_instances",
    "build_index",
    "build_training_instances",
    "build_vocab",
    "compute_diff_sets",
    "compute_edit_vector",
    "corpus_bleu",
    "encode_instance",
    "encode_prototype",
    "evaluate",
    "evaluate_loss",
    "forward_loss",
    "generate",
    "jaccard",
    "keyword_bucket_analysis",
    "lcs_length",
    "load_checkpoint",
    "load_corpus",
    "load_instances",
    "load_split",
    "make_split",
    "make_synthetic_corpus",
    "meteor",
    "nngen_select",
    "retrieve_prototype",
    "rouge_l",
    "rouge_w",
    "save_checkpoint",
    "save_corpus",
    "save_instances",
    "sentence_bleu",
    "tokenize_code",
    "tokenize_summary",
    "train",
    "vsm_retrieve",
]
