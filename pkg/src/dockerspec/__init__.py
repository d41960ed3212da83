"""Dockerfile spec inference, corpus construction, retrieval, and evaluation."""

from .dockerfile_syntax import (
    DockerfileDocument,
    Instruction,
    Node,
    ShellStatement,
    ast_size,
    build_ast,
    parse_dockerfile,
    parse_shell,
)
from .spec_model import (
    DockerSpec,
    WordLists,
    default_word_lists,
    deserialize_spec,
    serialize_spec,
    validate_spec,
)
from .spec_inference import infer_spec
from .corpus_pipeline import (
    CorpusEntry,
    build_corpus,
    dedup,
    filter_eligible,
    ingest_directory,
    instruction_jaccard,
    normalize_for_training,
    select_representative,
    split_dataset,
    token_length,
)
from .retrieval_engine import build_index, retrieve, vector_retrieve
from .evaluation import (
    adherence,
    benjamini_hochberg,
    bleu4,
    cliffs_delta,
    evaluate_run,
    layer_match,
    mann_whitney_u,
    normalized_distance,
    tree_edit_distance,
)

__version__ = "0.1.0"

__all__ = [
    "DockerSpec",
    "DockerfileDocument",
    "CorpusEntry",
    "Instruction",
    "Node",
    "ShellStatement",
    "WordLists",
    "adherence",
    "ast_size",
    "benjamini_hochberg",
    "bleu4",
    "build_ast",
    "build_corpus",
    "build_index",
    "cliffs_delta",
    "dedup",
    "default_word_lists",
    "deserialize_spec",
    "evaluate_run",
    "filter_eligible",
    "infer_spec",
    "ingest_directory",
    "instruction_jaccard",
    "layer_match",
    "mann_whitney_u",
    "normalize_for_training",
    "normalized_distance",
    "parse_dockerfile",
    "parse_shell",
    "retrieve",
    "select_representative",
    "serialize_spec",
    "split_dataset",
    "token_length",
    "tree_edit_distance",
    "validate_spec",
    "vector_retrieve",
]
