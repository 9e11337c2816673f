from pathlib import Path
from typing import Optional, Protocol, Sequence

import torch
from torch import nn

from src.errors import FormatError
from src.models import EmbeddingMatrix, EmbeddingRole, Node

from .checkpoints import load_checkpoint, save_checkpoint
from .tokenizer import PAD, TokenVocab


class SemanticEncoder(Protocol):
    def encode_all(self, nodes: Sequence[Node]) -> EmbeddingMatrix: ...


class TextEncoder(nn.Module):
    """
    Embedding-bag node encoder: a node is the mean of its token rows.

    The PAD row is zero at initialization and, being the bag's padding
    index, receives no gradient and never enters the mean.
    """

    def __init__(
        self,
        vocab: TokenVocab,
        d_sem: int = 200,
        use_projection_head: bool = False,
        seed: int = 0,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.vocab = vocab
        self.d_sem = d_sem
        self.embedding = nn.EmbeddingBag(
            len(vocab), d_sem, mode="mean", padding_idx=PAD, dtype=dtype
        )
        self.head: Optional[nn.Linear] = (
            nn.Linear(d_sem, d_sem, dtype=dtype) if use_projection_head else None
        )
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int) -> None:
        generator = torch.Generator().manual_seed(seed)
        bound = 0.5 / self.d_sem
        with torch.no_grad():
            self.embedding.weight.uniform_(-bound, bound, generator=generator)
            self.embedding.weight[PAD].zero_()
            if self.head is not None:
                nn.init.eye_(self.head.weight)
                self.head.bias.zero_()

    def token_batch(self, texts: Sequence[str]) -> torch.Tensor:
        """Right-padded (len(texts), max_tokens) tensor of token ids."""
        ids = [self.vocab.tokenize(text) for text in texts]
        width = max((len(row) for row in ids), default=1)
        batch = torch.full((len(ids), width), PAD, dtype=torch.long)
        for i, row in enumerate(ids):
            batch[i, : len(row)] = torch.tensor(row, dtype=torch.long)
        return batch

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        pooled = self.embedding(token_ids)
        if self.head is not None:
            pooled = self.head(pooled)
        return pooled

    def encode_node(self, text: str) -> torch.Tensor:
        return self.forward(self.token_batch([text]))[0]

    @torch.no_grad()
    def encode_all(
        self, nodes: Sequence[Node], batch_size: int = 1024
    ) -> EmbeddingMatrix:
        was_training = self.training
        self.eval()
        rows = [
            self.forward(self.token_batch([n.text for n in nodes[i : i + batch_size]]))
            for i in range(0, len(nodes), batch_size)
        ]
        self.train(was_training)

        values = (
            torch.cat(rows) if rows else torch.zeros((0, self.d_sem), dtype=torch.float64)
        )
        return EmbeddingMatrix(values=values, role=EmbeddingRole.semantic)


def encode_node(encoder: TextEncoder, text: str) -> torch.Tensor:
    return encoder.encode_node(text)


def encode_all(encoder: SemanticEncoder, nodes: Sequence[Node]) -> EmbeddingMatrix:
    return encoder.encode_all(nodes)


def random_semantic_matrix(
    num_nodes: int, d_sem: int, seed: int
) -> EmbeddingMatrix:
    """Frozen random stand-in for E_sem, on the same init scale as the encoder."""
    generator = torch.Generator().manual_seed(seed)
    bound = 0.5 / d_sem
    values = torch.empty((num_nodes, d_sem), dtype=torch.float64).uniform_(
        -bound, bound, generator=generator
    )
    return EmbeddingMatrix(values=values, role=EmbeddingRole.semantic)


ENCODER_KIND = "text-encoder"


def save_text_encoder(encoder: TextEncoder, path: str | Path) -> None:
    save_checkpoint(
        path,
        kind=ENCODER_KIND,
        tensors=encoder.state_dict(),
        meta={
            "d_sem": encoder.d_sem,
            "use_projection_head": encoder.head is not None,
            "vocab": encoder.vocab.tokens,
        },
    )


def load_text_encoder(
    path: str | Path, dtype: torch.dtype = torch.float64
) -> TextEncoder:
    checkpoint = load_checkpoint(path)
    if checkpoint.kind != ENCODER_KIND:
        raise FormatError(f"{path} holds a {checkpoint.kind!r} checkpoint")

    tokens = checkpoint.meta["vocab"][2:]
    encoder = TextEncoder(
        TokenVocab(tokens),
        d_sem=checkpoint.meta["d_sem"],
        use_projection_head=checkpoint.meta["use_projection_head"],
        dtype=dtype,
    )
    encoder.load_state_dict(checkpoint.state_dict(dtype))
    return encoder
