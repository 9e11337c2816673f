from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .precomputed import (
    PrecomputedEncoder,
    load_precomputed,
    read_embedding_file,
    write_embeddings,
)
from .text_encoder import (
    SemanticEncoder,
    TextEncoder,
    encode_all,
    encode_node,
    load_text_encoder,
    random_semantic_matrix,
    save_text_encoder,
)
from .tokenizer import PAD, UNK, TokenVocab, split_tokens, tokenize

__all__ = [
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "PrecomputedEncoder",
    "load_precomputed",
    "read_embedding_file",
    "write_embeddings",
    "SemanticEncoder",
    "TextEncoder",
    "encode_all",
    "encode_node",
    "random_semantic_matrix",
    "load_text_encoder",
    "save_text_encoder",
    "PAD",
    "UNK",
    "TokenVocab",
    "split_tokens",
    "tokenize",
]
