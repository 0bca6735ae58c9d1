"""textregen: corrupt texts under masking strategies, regenerate them
with infilling (bidirectional) or left-to-right (causal) predictors,
score the generations, and probe their usefulness on downstream tasks.
"""

from .corpus import Corpus, Document, SplitSpec, load_corpus, load_toy_corpus, save_corpus, split_corpus, top_k_labels
from .corruption import ContextSequence, Corruptor, MaskedSequence, MaskingStrategy, corrupt, extract_context, mask_keep_class, mask_random
from .decoder import DecodePolicy, GenerationRecord, generate_causal, infill
from .experiment import ExperimentConfig, ResultsTable, emit_report, run_experiment
from .metrics import CooccurrenceEmbedder, EmbeddingTable, MetricReport, bleu, meteor, rouge1, score_generations, semscore, train_embeddings
from .predictor import BidirectionalNgram, CausalNgram, Distribution, load_model, save_model
from .remote import RemotePredictor
from .tokenizer import EntityLexicon, Token, TokenSequence, Vocab, build_vocab, detokenize, tokenize

__version__ = "0.1.0"

__all__ = [
    "BidirectionalNgram",
    "CausalNgram",
    "ContextSequence",
    "CooccurrenceEmbedder",
    "Corpus",
    "Corruptor",
    "DecodePolicy",
    "Distribution",
    "Document",
    "EmbeddingTable",
    "EntityLexicon",
    "ExperimentConfig",
    "GenerationRecord",
    "MaskedSequence",
    "MaskingStrategy",
    "MetricReport",
    "RemotePredictor",
    "ResultsTable",
    "SplitSpec",
    "Token",
    "TokenSequence",
    "Vocab",
    "bleu",
    "build_vocab",
    "corrupt",
    "detokenize",
    "emit_report",
    "extract_context",
    "generate_causal",
    "infill",
    "load_corpus",
    "load_model",
    "load_toy_corpus",
    "mask_keep_class",
    "mask_random",
    "meteor",
    "rouge1",
    "run_experiment",
    "save_corpus",
    "save_model",
    "score_generations",
    "semscore",
    "split_corpus",
    "tokenize",
    "top_k_labels",
    "train_embeddings",
]
