"""N-gram language models for Scratch programs.

Tokenizes ``.sb3`` archives into linear block-token streams, trains n-gram
models with modified Kneser-Ney smoothing, and applies them to next-block
completion and least-probable-sequence bug finding, with an evaluation
harness for both tasks.
"""

from .bugfinder import (BugFinder, BugReport, SuspiciousSequence,
                        extract_sequences, rank_suspicious,
                        train_reference_model)
from .completion import (PredictionRecord, Suggestion, batch_evaluate,
                         complete, extract_context)
from .errors import (CorruptModel, DegenerateSample, EmptyCorpus, EmptyRecords,
                     FormatVersionMismatch, MalformedArchive, MalformedProgram,
                     NetworkError, NotFound, OrderMismatch, RateLimited,
                     ScratchLMError, UnknownToken, ZeroTotal)
from .fetch import fetch_project
from .metrics import (accuracy_by_group, accuracy_grid, percent_bugs_found,
                      topx_accuracy)
from .ngram import (Discounts, DiscountTriple, KneserNeyModel, NgramCounts,
                    count_ngrams, fit_discounts, load_model, merge_counts,
                    save_model)
from .sb3 import ProjectAST, parse_project
from .stats import mann_whitney_u, vargha_delaney_a
from .tokenizer import (ProjectMeta, ScratchTokenizer, ScriptStream,
                        TokenizedProject, TokenizeOptions, filter_corpus,
                        tokenize_project, tokenize_script)
from .vocab import BlockMetadata, Token, Vocabulary, block_metadata

__version__ = "0.1.0"

__all__ = [
    "BlockMetadata", "BugFinder", "BugReport", "CorruptModel",
    "DegenerateSample", "Discounts", "DiscountTriple", "EmptyCorpus",
    "EmptyRecords", "FormatVersionMismatch", "KneserNeyModel",
    "MalformedArchive", "MalformedProgram", "NetworkError", "NgramCounts",
    "NotFound", "OrderMismatch", "PredictionRecord", "ProjectAST",
    "ProjectMeta", "RateLimited", "ScratchLMError", "ScratchTokenizer",
    "ScriptStream", "Suggestion", "SuspiciousSequence", "Token",
    "TokenizeOptions", "TokenizedProject", "UnknownToken", "Vocabulary",
    "ZeroTotal", "accuracy_by_group", "accuracy_grid", "batch_evaluate",
    "block_metadata", "complete", "count_ngrams", "extract_context",
    "extract_sequences", "fetch_project", "filter_corpus", "fit_discounts",
    "load_model", "mann_whitney_u", "merge_counts", "parse_project",
    "percent_bugs_found", "rank_suspicious", "save_model", "tokenize_project",
    "tokenize_script", "topx_accuracy", "train_reference_model",
    "vargha_delaney_a",
]
