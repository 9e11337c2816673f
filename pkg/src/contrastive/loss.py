import numpy as np
import torch
import torch.nn.functional as F

from src.errors import NumericDomainError


def _as_tensor(value) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value
    return torch.as_tensor(np.asarray(value, dtype=np.float64))


def _check_norms(*matrices: torch.Tensor) -> None:
    for matrix in matrices:
        if torch.any(torch.linalg.vector_norm(matrix.detach(), dim=-1) == 0):
            raise NumericDomainError("cosine similarity of a zero-norm embedding")


def cosine_sim(u, v) -> float:
    u, v = _as_tensor(u), _as_tensor(v)
    _check_norms(u, v)
    return float(torch.dot(u, v) / (torch.linalg.vector_norm(u) * torch.linalg.vector_norm(v)))


def pairwise_cosine(left: torch.Tensor, right: torch.Tensor) -> torch.Tensor:
    _check_norms(left, right)
    return F.normalize(left, dim=-1) @ F.normalize(right, dim=-1).T


def mnr_loss(
    anchors: torch.Tensor,
    positives: torch.Tensor,
    negatives: torch.Tensor,
    temperature: float = 1.0,
) -> torch.Tensor:
    """
    Multiple negatives ranking loss, summed over the batch. Each anchor is
    scored against every positive and every hard negative of the batch, so
    row i is a softmax over 2M cosine logits whose target is column i.
    """
    candidates = torch.cat([positives, negatives], dim=0)
    logits = pairwise_cosine(anchors, candidates) / temperature
    targets = torch.arange(anchors.shape[0], device=anchors.device)
    return F.cross_entropy(logits, targets, reduction="sum")


def mnr_loss_with_grad(
    anchors, positives, negatives, temperature: float = 1.0
) -> tuple[float, tuple[torch.Tensor, torch.Tensor, torch.Tensor]]:
    """Loss value plus its gradients w.r.t. the anchor, positive and negative embeddings."""
    inputs = [
        _as_tensor(x).detach().clone().requires_grad_(True)
        for x in (anchors, positives, negatives)
    ]
    loss = mnr_loss(*inputs, temperature=temperature)
    grads = torch.autograd.grad(loss, inputs)
    return float(loss), tuple(grads)
