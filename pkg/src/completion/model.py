from pathlib import Path
from typing import Any, Optional

import torch
import torch.nn.functional as F
from loguru import logger
from torch import nn

from src.encoders import load_checkpoint, save_checkpoint
from src.errors import ArgumentError, FormatError
from src.graph_encoder import GcnEncoder, normalize_adjacency, xavier_uniform
from src.kg import Graph
from src.models import ClusterAssignment, EmbeddingMatrix, EmbeddingRole
from src.settings import GcnConfig, TrainConfig
from src.utils import derive_seed

from .layers import candidate_logits, decode_query, fuse

MODEL_KIND = "completion-model"


class CompletionModel(nn.Module):
    """
    Fused node embeddings feeding a convolutional 1-vs-N decoder.

    E_sem and the latent-concept rows are frozen buffers; W_embedding, the
    relation table, the GCN and the decoder are trained.
    """

    def __init__(
        self,
        graph: Graph,
        e_sem: EmbeddingMatrix,
        assignment: Optional[ClusterAssignment],
        cfg: TrainConfig,
        gcn_cfg: GcnConfig,
        seed: int = 0,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        num_nodes = graph.num_nodes
        if e_sem.num_rows != num_nodes:
            raise ArgumentError(
                f"semantic rows ({e_sem.num_rows}) != node count ({num_nodes})"
            )

        self.cfg = cfg
        self.gcn_cfg = gcn_cfg
        self.adjacency = normalize_adjacency(graph, dtype=dtype)

        self.register_buffer("e_sem", e_sem.as_tensor(dtype))
        latent = torch.zeros(num_nodes, e_sem.dim, dtype=dtype)
        if cfg.use_nc and assignment is not None:
            if assignment.num_nodes != num_nodes:
                raise ArgumentError(
                    f"assignment covers {assignment.num_nodes} nodes, graph has {num_nodes}"
                )
            latent = torch.as_tensor(assignment.latent_matrix(), dtype=dtype)
        self.register_buffer("latent", latent)
        self.register_buffer("mask_factor", torch.zeros((), dtype=dtype))

        self.gcn = GcnEncoder(
            num_nodes, gcn_cfg, e_sem, seed=derive_seed(seed, "gcn"), dtype=dtype
        )

        generator = torch.Generator().manual_seed(derive_seed(seed, "decoder"))
        d_in = 2 * e_sem.dim + gcn_cfg.d_graph
        d = cfg.d_model
        self.w_embedding = nn.Parameter(xavier_uniform(d_in, d, generator, dtype))
        self.relation_embedding = nn.Parameter(
            xavier_uniform(graph.num_relations, d, generator, dtype)
        )
        kernel_bound = (2 * cfg.kernel_width) ** -0.5
        self.kernels = nn.Parameter(
            torch.empty(cfg.conv_channels, 2, cfg.kernel_width, dtype=dtype).uniform_(
                -kernel_bound, kernel_bound, generator=generator
            )
        )
        self.projection = nn.Parameter(
            xavier_uniform(cfg.conv_channels * d, d, generator, dtype)
        )
        self.w_conv = nn.Parameter(xavier_uniform(d, d, generator, dtype))

    def set_mask_factor(self, factor: float) -> None:
        self.mask_factor.fill_(factor)

    def node_embeddings(self) -> torch.Tensor:
        e_graph = self.gcn(self.adjacency)
        return fuse(self.e_sem, e_graph, self.latent, self.mask_factor, self.w_embedding)

    def forward(self, heads: torch.Tensor, rels: torch.Tensor) -> torch.Tensor:
        """Logits over every candidate tail for each (head, rel) query."""
        nodes = self.node_embeddings()
        q = decode_query(
            nodes[heads], self.relation_embedding[rels], self.kernels, self.projection
        )
        q = F.dropout(q, p=self.cfg.decoder_dropout, training=self.training)
        return candidate_logits(q, nodes, self.w_conv)

    @torch.no_grad()
    def score(self, heads: torch.Tensor, rels: torch.Tensor) -> torch.Tensor:
        was_training = self.training
        self.eval()
        scores = torch.sigmoid(self.forward(heads, rels))
        self.train(was_training)
        return scores

    @torch.no_grad()
    def fused_embeddings(self) -> EmbeddingMatrix:
        was_training = self.training
        self.eval()
        values = self.node_embeddings()
        self.train(was_training)
        return EmbeddingMatrix(values=values, role=EmbeddingRole.fused)


def save_completion_model(
    model: CompletionModel, path: str | Path, extra: Optional[dict[str, Any]] = None
) -> None:
    meta = {
        "train": model.cfg.model_dump(mode="json"),
        "gcn": model.gcn_cfg.model_dump(mode="json"),
        "d_sem": int(model.e_sem.shape[1]),
        **(extra or {}),
    }
    save_checkpoint(path, MODEL_KIND, model.state_dict(), meta)


def load_completion_model(
    path: str | Path, graph: Graph, dtype: torch.dtype = torch.float64
) -> CompletionModel:
    checkpoint = load_checkpoint(path)
    if checkpoint.kind != MODEL_KIND:
        raise FormatError(f"{path} holds a {checkpoint.kind}, not a {MODEL_KIND}")

    cfg = TrainConfig(**checkpoint.meta["train"])
    gcn_cfg = GcnConfig(**checkpoint.meta["gcn"])
    e_sem = EmbeddingMatrix(
        values=checkpoint.tensors["e_sem"], role=EmbeddingRole.semantic
    )
    model = CompletionModel(graph, e_sem, None, cfg, gcn_cfg, dtype=dtype)
    model.load_state_dict(checkpoint.state_dict(dtype))
    model.eval()
    logger.info(f"Loaded completion model from {path}")
    return model
