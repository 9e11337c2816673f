import copy
import json
from collections import defaultdict
from pathlib import Path
from typing import Optional

import torch
import torch.nn.functional as F
from loguru import logger
from pydantic import BaseModel

from src.encoders import random_semantic_matrix
from src.errors import ConfigurationError
from src.evaluation import evaluate
from src.kg import Graph
from src.models import ClusterAssignment, EmbeddingMatrix, Split
from src.settings import EvalSetting, GcnConfig, TrainConfig
from src.utils import derive_seed, timed_stage

from .layers import mask_schedule
from .model import CompletionModel

DEFAULT_MIN_EPOCHS = 200


class EpochRecord(BaseModel):
    epoch: int
    loss: float
    mask_factor: float
    dev_mrr: Optional[float] = None


class TrainReport(BaseModel):
    records: list[EpochRecord]
    best_epoch: Optional[int] = None
    best_dev_mrr: Optional[float] = None
    epochs_run: int
    stopped_early: bool = False

    @property
    def epoch_losses(self) -> list[float]:
        return [record.loss for record in self.records]

    @property
    def dev_mrr_trace(self) -> list[tuple[int, float]]:
        return [(r.epoch, r.dev_mrr) for r in self.records if r.dev_mrr is not None]


def training_queries(graph: Graph) -> tuple[torch.Tensor, list[list[int]]]:
    """(head, rel) queries over train edges, inverse queries included, with their gold tails."""
    tails: dict[tuple[int, int], list[int]] = defaultdict(list)
    for head, rel, tail in graph.edges(Split.train):
        tails[(head, rel)].append(tail)
    keys = sorted(tails)
    queries = torch.tensor(keys, dtype=torch.long).reshape(-1, 2)
    return queries, [sorted(tails[key]) for key in keys]


def smoothed_targets(
    golds: list[list[int]], num_nodes: int, smoothing: float, dtype: torch.dtype
) -> torch.Tensor:
    targets = torch.zeros(len(golds), num_nodes, dtype=dtype)
    for row, tails in enumerate(golds):
        targets[row, tails] = 1.0
    return (1.0 - smoothing) * targets + smoothing / num_nodes


def _resolve_semantics(
    graph: Graph,
    e_sem: Optional[EmbeddingMatrix],
    assignment: Optional[ClusterAssignment],
    cfg: TrainConfig,
    d_sem: int,
) -> EmbeddingMatrix:
    if cfg.use_nc and assignment is None:
        raise ConfigurationError("use_nc is on but no cluster assignment was provided")
    if cfg.use_cp:
        if e_sem is None:
            raise ConfigurationError("use_cp is on but no semantic embeddings were provided")
        return e_sem
    dim = e_sem.dim if e_sem is not None else d_sem
    logger.info("Contrastive pretraining disabled: using a random frozen semantic matrix")
    return random_semantic_matrix(graph.num_nodes, dim, derive_seed(cfg.seed, "no-cp"))


@timed_stage
def train_completion(
    graph: Graph,
    e_sem: Optional[EmbeddingMatrix],
    assignment: Optional[ClusterAssignment],
    cfg: TrainConfig,
    gcn_cfg: Optional[GcnConfig] = None,
    d_sem: int = 200,
    dtype: torch.dtype = torch.float64,
    log_path: Optional[str | Path] = None,
) -> tuple[CompletionModel, TrainReport]:
    """
    1-vs-N training with label-smoothed BCE. Dev MRR is checked every
    `eval_every` epochs once `cfg.epochs` have run; training then stops as
    soon as `patience` checks pass without improvement, and the best
    checkpoint is restored.
    """
    gcn_cfg = gcn_cfg or GcnConfig()
    if cfg.epochs < DEFAULT_MIN_EPOCHS:
        logger.warning(
            f"Minimum epoch count {cfg.epochs} is below the default of {DEFAULT_MIN_EPOCHS}"
        )
    semantics = _resolve_semantics(graph, e_sem, assignment, cfg, d_sem)

    torch.manual_seed(derive_seed(cfg.seed, "dropout"))
    model = CompletionModel(
        graph, semantics, assignment, cfg, gcn_cfg, seed=cfg.seed, dtype=dtype
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    generator = torch.Generator().manual_seed(derive_seed(cfg.seed, "shuffle"))

    queries, golds = training_queries(graph)
    if len(golds) == 0:
        raise ConfigurationError("the graph has no train edges to learn from")
    dev_tuples = graph.edges(Split.valid, include_inverse=False)
    if not dev_tuples:
        logger.warning("No valid split: the final epoch is kept instead of the best dev MRR")

    log_file = open(log_path, "w", encoding="utf-8") if log_path is not None else None
    records: list[EpochRecord] = []
    best_state, best_epoch, best_mrr = None, None, None
    stale_checks = 0
    stopped_early = False

    try:
        for epoch in range(cfg.max_epochs):
            factor = mask_schedule(
                epoch, cfg.mask_epochs, cfg.mask_schedule_kind, cfg.mask_steps
            )
            model.set_mask_factor(factor)
            model.train()

            total = 0.0
            order = torch.randperm(len(golds), generator=generator)
            for batch in torch.split(order, cfg.batch_size):
                logits = model(queries[batch, 0], queries[batch, 1])
                targets = smoothed_targets(
                    [golds[i] for i in batch.tolist()],
                    graph.num_nodes,
                    cfg.label_smoothing,
                    dtype,
                )
                loss = F.binary_cross_entropy_with_logits(logits, targets)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total += float(loss) * len(batch)

            record = EpochRecord(epoch=epoch, loss=total / len(golds), mask_factor=factor)

            past_minimum = epoch + 1 >= cfg.epochs
            if dev_tuples and past_minimum and (epoch + 1) % cfg.eval_every == 0:
                record.dev_mrr = evaluate(
                    model, dev_tuples, graph, setting=EvalSetting.filtered
                ).mrr
                if best_mrr is None or record.dev_mrr > best_mrr:
                    best_state = copy.deepcopy(model.state_dict())
                    best_epoch, best_mrr = epoch, record.dev_mrr
                    stale_checks = 0
                else:
                    stale_checks += 1
                logger.info(
                    f"Epoch {epoch}: loss {record.loss:.6f}, dev MRR {record.dev_mrr:.4f}"
                )
            else:
                logger.debug(f"Epoch {epoch}: loss {record.loss:.6f}")

            records.append(record)
            if log_file is not None:
                log_file.write(json.dumps(record.model_dump(exclude_none=True)) + "\n")

            if past_minimum:
                if not dev_tuples or stale_checks >= cfg.patience:
                    stopped_early = epoch + 1 < cfg.max_epochs
                    break
    finally:
        if log_file is not None:
            log_file.close()

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()

    report = TrainReport(
        records=records,
        best_epoch=best_epoch,
        best_dev_mrr=best_mrr,
        epochs_run=len(records),
        stopped_early=stopped_early,
    )
    summary = f"Completion training ran {report.epochs_run} epochs"
    if best_mrr is not None:
        summary += f", best dev MRR {best_mrr:.4f} at epoch {best_epoch}"
    logger.success(summary)
    return model, report
