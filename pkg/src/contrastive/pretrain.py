from typing import Optional, Sequence

import torch
from loguru import logger
from pydantic import BaseModel

from src.encoders import TextEncoder
from src.errors import ArgumentError
from src.kg import Graph
from src.models import ContrastiveSample, ContrastiveSampleSet, Node
from src.settings import PretrainConfig
from src.utils import derive_seed, timed_stage

from .loss import mnr_loss
from .samples import build_samples


class PretrainReport(BaseModel):
    epoch_losses: list[float]
    num_samples: int
    skipped: int
    steps: int


def _batches(order: torch.Tensor, batch_size: int) -> list[torch.Tensor]:
    batches = list(torch.split(order, batch_size))
    # in-batch negatives need at least two pairs
    if batches and len(batches[-1]) < 2:
        batches.pop()
    return batches


def _optimizer(encoder: TextEncoder, cfg: PretrainConfig) -> torch.optim.Adam:
    groups = [{"params": list(encoder.embedding.parameters()), "lr": cfg.lr_encoder}]
    if encoder.head is not None:
        groups.append({"params": list(encoder.head.parameters()), "lr": cfg.lr_head})
    return torch.optim.Adam(groups, betas=(0.9, 0.999), eps=1e-8)


@timed_stage
def pretrain(
    encoder: TextEncoder,
    samples: ContrastiveSampleSet | Sequence[ContrastiveSample],
    cfg: PretrainConfig,
    nodes: Sequence[Node],
    graph: Optional[Graph] = None,
) -> tuple[TextEncoder, PretrainReport]:
    """
    Fit the text encoder with the multiple negatives ranking loss.

    Samples are shuffled every epoch under the config seed and each batch
    takes one Adam step. With `resample_negatives_each_epoch` the hard
    negatives are redrawn from `graph` before every epoch after the first.
    """
    sample_set = (
        samples
        if isinstance(samples, ContrastiveSampleSet)
        else ContrastiveSampleSet(samples=list(samples))
    )
    if len(sample_set) == 0:
        raise ArgumentError("pretraining needs at least one contrastive sample")
    if cfg.resample_negatives_each_epoch and graph is None:
        raise ArgumentError("resampling negatives requires the graph")

    token_table = encoder.token_batch([node.text for node in nodes])
    optimizer = _optimizer(encoder, cfg)
    generator = torch.Generator().manual_seed(cfg.seed)

    encoder.train()
    epoch_losses: list[float] = []
    steps = 0
    for epoch in range(cfg.epochs):
        if cfg.resample_negatives_each_epoch and epoch > 0:
            sample_set = build_samples(
                graph, derive_seed(cfg.seed, epoch), cfg.max_rejection_attempts
            )

        triples = torch.tensor(
            [[s.anchor, s.positive, s.hard_negative] for s in sample_set.samples],
            dtype=torch.long,
        )
        order = torch.randperm(len(triples), generator=generator)

        total, counted = 0.0, 0
        for batch in _batches(order, cfg.batch_size):
            ids = triples[batch]
            size = ids.shape[0]
            stacked = encoder(token_table[torch.cat([ids[:, 0], ids[:, 1], ids[:, 2]])])
            anchors, positives, negatives = torch.split(stacked, size)

            loss = mnr_loss(anchors, positives, negatives, temperature=cfg.temperature)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            total += float(loss)
            counted += size
            steps += 1

        if counted == 0:
            logger.warning(f"Pretrain epoch {epoch}: no batch with two or more samples")
            continue
        epoch_losses.append(total / counted)
        logger.debug(f"Pretrain epoch {epoch}: mean loss {epoch_losses[-1]:.6f}")

    encoder.eval()
    report = PretrainReport(
        epoch_losses=epoch_losses,
        num_samples=len(sample_set),
        skipped=sample_set.skipped,
        steps=steps,
    )
    logger.success(f"Pretraining finished after {steps} steps")
    return encoder, report
