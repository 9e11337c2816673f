from typing import Iterable, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from loguru import logger
from torch import nn

from src.errors import ArgumentError
from src.kg import Graph
from src.models import EmbeddingMatrix, EmbeddingRole
from src.settings import GcnConfig, GcnInitMode

# sparse |N| x |N| COO tensor holding D^-1/2 (A + I) D^-1/2
NormalizedAdjacency = torch.Tensor


def xavier_uniform(
    rows: int, cols: int, generator: torch.Generator, dtype: torch.dtype
) -> torch.Tensor:
    bound = float(np.sqrt(6.0 / (rows + cols)))
    return torch.empty(rows, cols, dtype=dtype).uniform_(-bound, bound, generator=generator)


def _symmetric_normalized(
    num_nodes: int, neighbor_sets: Sequence[Iterable[int]], dtype: torch.dtype
) -> NormalizedAdjacency:
    rows: list[int] = []
    cols: list[int] = []
    for node, linked in enumerate(neighbor_sets):
        closed = sorted(set(linked) | {node})
        rows.extend([node] * len(closed))
        cols.extend(closed)

    row_index = np.asarray(rows, dtype=np.int64)
    col_index = np.asarray(cols, dtype=np.int64)
    degree = np.bincount(row_index, minlength=num_nodes).astype(np.float64)
    inv_sqrt = 1.0 / np.sqrt(degree)
    values = inv_sqrt[row_index] * inv_sqrt[col_index]

    return torch.sparse_coo_tensor(
        torch.from_numpy(np.stack([row_index, col_index])),
        torch.from_numpy(values).to(dtype),
        size=(num_nodes, num_nodes),
    ).coalesce()


def normalize_adjacency(
    graph: Graph, dtype: torch.dtype = torch.float64
) -> NormalizedAdjacency:
    """
    Binary undirected adjacency over the structure edges with relations
    collapsed and inverse edges merged into their forward edge, plus
    self-loops, symmetrically normalized.
    """
    if graph.num_nodes == 0:
        raise ArgumentError("cannot normalize the adjacency of an empty graph")
    return _symmetric_normalized(
        graph.num_nodes,
        [graph.neighbors(node) for node in range(graph.num_nodes)],
        dtype,
    )


def adjacency_from_pairs(
    num_nodes: int, pairs: Iterable[tuple[int, int]], dtype: torch.dtype = torch.float64
) -> NormalizedAdjacency:
    """Same normalization for a plain undirected pair list."""
    if num_nodes == 0:
        raise ArgumentError("cannot normalize the adjacency of an empty graph")
    neighbor_sets: list[set[int]] = [set() for _ in range(num_nodes)]
    for a, b in pairs:
        if not (0 <= a < num_nodes and 0 <= b < num_nodes):
            raise ArgumentError(f"pair ({a}, {b}) outside [0, {num_nodes})")
        neighbor_sets[a].add(b)
        neighbor_sets[b].add(a)
    return _symmetric_normalized(num_nodes, neighbor_sets, dtype)


def gcn_forward(
    weights: Sequence[torch.Tensor],
    adj: NormalizedAdjacency,
    x0: torch.Tensor,
    dropout: float = 0.0,
    training: bool = False,
) -> torch.Tensor:
    """H(l+1) = ReLU(Â H(l) W(l)) on hidden layers; the last layer stays linear."""
    if not weights:
        raise ArgumentError("a GCN needs at least one layer")
    if adj.shape[0] != x0.shape[0]:
        raise ArgumentError(
            f"adjacency covers {adj.shape[0]} nodes, features cover {x0.shape[0]}"
        )

    hidden = x0
    for layer, weight in enumerate(weights):
        if weight.shape[0] != hidden.shape[1]:
            raise ArgumentError(
                f"layer {layer} expects {weight.shape[0]} inputs, got {hidden.shape[1]}"
            )
        hidden = torch.sparse.mm(adj, hidden @ weight)
        if layer < len(weights) - 1:
            hidden = F.relu(hidden)
            hidden = F.dropout(hidden, p=dropout, training=training)
    return hidden


class GcnEncoder(nn.Module):
    """
    Structure encoder over the full graph. In random mode the input features
    are a trainable table; in semantic mode they are the frozen E_sem rows.
    """

    def __init__(
        self,
        num_nodes: int,
        cfg: GcnConfig,
        e_sem: Optional[EmbeddingMatrix] = None,
        seed: int = 0,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.init_mode = cfg.init_mode
        self.dropout = cfg.dropout
        generator = torch.Generator().manual_seed(seed)

        if cfg.init_mode == GcnInitMode.semantic:
            if e_sem is None:
                raise ArgumentError("semantic init mode needs semantic embeddings")
            if e_sem.num_rows != num_nodes:
                raise ArgumentError(
                    f"semantic rows ({e_sem.num_rows}) != node count ({num_nodes})"
                )
            self.register_buffer("x0", e_sem.as_tensor(dtype))
            self.input_table = None
            d_in = e_sem.dim
        else:
            self.input_table = nn.Parameter(
                xavier_uniform(num_nodes, cfg.d_input, generator, dtype)
            )
            d_in = cfg.d_input

        dims = [d_in] + [cfg.d_graph] * cfg.num_layers
        layers = []
        for d_from, d_to in zip(dims[:-1], dims[1:]):
            layers.append(nn.Parameter(xavier_uniform(d_from, d_to, generator, dtype)))
        self.weights = nn.ParameterList(layers)

        logger.debug(
            f"GCN encoder: {cfg.num_layers} layers {dims}, init mode {cfg.init_mode}"
        )

    def inputs(self) -> torch.Tensor:
        return self.input_table if self.input_table is not None else self.x0

    def forward(self, adj: NormalizedAdjacency) -> torch.Tensor:
        return gcn_forward(
            list(self.weights), adj, self.inputs(), self.dropout, self.training
        )

    @torch.no_grad()
    def encode(self, adj: NormalizedAdjacency) -> EmbeddingMatrix:
        was_training = self.training
        self.eval()
        values = self.forward(adj)
        self.train(was_training)
        return EmbeddingMatrix(values=values, role=EmbeddingRole.structural)
