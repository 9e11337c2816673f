import math

import torch
import torch.nn.functional as F

from src.errors import ArgumentError
from src.settings import MaskScheduleKind


def mask_schedule(
    epoch: int,
    mask_epochs: int,
    kind: MaskScheduleKind = MaskScheduleKind.linear,
    steps: int = 4,
) -> float:
    """Multiplier for the latent-concept block, ramping from 0 to 1 over `mask_epochs`."""
    if epoch < 0:
        raise ArgumentError(f"epoch must be >= 0, got {epoch}")
    if mask_epochs == 0:
        return 1.0

    progress = min(1.0, epoch / mask_epochs)
    if kind == MaskScheduleKind.step:
        return math.floor(progress * steps) / steps
    return progress


def fuse(
    e_sem: torch.Tensor,
    e_graph: torch.Tensor,
    e_lc: torch.Tensor,
    factor: float | torch.Tensor,
    w_embedding: torch.Tensor,
) -> torch.Tensor:
    """e = [e_sem; e_graph; factor * e_lc] @ W_embedding, for single rows or batches."""
    width = e_sem.shape[-1] + e_graph.shape[-1] + e_lc.shape[-1]
    if width != w_embedding.shape[0]:
        raise ArgumentError(
            f"concatenated width {width} != W_embedding rows {w_embedding.shape[0]}"
        )
    if not 0.0 <= float(factor) <= 1.0:
        raise ArgumentError(f"mask factor must lie in [0, 1], got {float(factor)}")
    return torch.cat([e_sem, e_graph, factor * e_lc], dim=-1) @ w_embedding


def decode_query(
    e_h: torch.Tensor,
    e_rel: torch.Tensor,
    kernels: torch.Tensor,
    projection: torch.Tensor,
) -> torch.Tensor:
    """
    Stack head and relation rows as two channels, run C same-padded width-w
    convolutions along the embedding axis, ReLU, flatten and project back.

    kernels: (C, 2, w); projection: (C * d_model, d_model).
    """
    single = e_h.dim() == 1
    if single:
        e_h, e_rel = e_h.unsqueeze(0), e_rel.unsqueeze(0)
    if e_h.shape != e_rel.shape:
        raise ArgumentError(f"head {tuple(e_h.shape)} != relation {tuple(e_rel.shape)}")

    width = kernels.shape[-1]
    if width % 2 == 0:
        raise ArgumentError("kernel width must be odd for same-padding")
    stacked = torch.stack([e_h, e_rel], dim=1)
    features = F.relu(F.conv1d(stacked, kernels, padding=width // 2))
    q = features.flatten(start_dim=1) @ projection
    return q[0] if single else q


def candidate_logits(
    q: torch.Tensor, e_n: torch.Tensor, w_conv: torch.Tensor
) -> torch.Tensor:
    return q @ w_conv @ e_n.transpose(0, 1)


def score_candidates(
    q: torch.Tensor, e_n: torch.Tensor, w_conv: torch.Tensor
) -> torch.Tensor:
    """σ(q · W_conv · E_Nᵀ) over every candidate node."""
    return torch.sigmoid(candidate_logits(q, e_n, w_conv))
