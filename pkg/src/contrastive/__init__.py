from .loss import cosine_sim, mnr_loss, mnr_loss_with_grad, pairwise_cosine
from .pretrain import PretrainReport, pretrain
from .samples import build_samples

__all__ = [
    "cosine_sim",
    "mnr_loss",
    "mnr_loss_with_grad",
    "pairwise_cosine",
    "PretrainReport",
    "pretrain",
    "build_samples",
]
