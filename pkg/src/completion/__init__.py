from .layers import candidate_logits, decode_query, fuse, mask_schedule, score_candidates
from .model import (
    MODEL_KIND,
    CompletionModel,
    load_completion_model,
    save_completion_model,
)
from .train import (
    EpochRecord,
    TrainReport,
    smoothed_targets,
    train_completion,
    training_queries,
)

__all__ = [
    "candidate_logits",
    "decode_query",
    "fuse",
    "mask_schedule",
    "score_candidates",
    "MODEL_KIND",
    "CompletionModel",
    "load_completion_model",
    "save_completion_model",
    "EpochRecord",
    "TrainReport",
    "smoothed_targets",
    "train_completion",
    "training_queries",
]
