import csv
from pathlib import Path
from typing import Sequence

from loguru import logger
from result import Ok, Result

from src.errors import ConfigurationError
from src.kg import Graph, sparsify
from src.models import EmbeddingMatrix, Metrics, Split
from src.utils import StageFailure, derive_seed

from .context import RunContext
from .stages import (
    cluster_semantics,
    compute_semantics,
    fit_model,
    require_k,
    score_model,
    stage_error,
)

SWEEP_DIR = "sweeps"


def _metric_columns(metrics: Metrics, hits_at: Sequence[int]) -> dict[str, float]:
    row = {"mrr": metrics.mrr}
    row.update({f"hits@{k}": metrics.hits[k] for k in hits_at})
    return row


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        raise ConfigurationError("a sweep needs at least one point")
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _run_point(
    ctx: RunContext, graph: Graph, e_sem: EmbeddingMatrix, k: int
) -> tuple[Metrics, float]:
    cfg = ctx.config
    assignment = cluster_semantics(cfg, e_sem, k) if cfg.train.use_nc else None
    model, _ = fit_model(cfg, graph, e_sem, assignment)
    metrics, _ = score_model(cfg, model, graph)
    return metrics, assignment.inertia if assignment is not None else 0.0


def sweep_k(ctx: RunContext, ks: Sequence[int]) -> Result[str, StageFailure]:
    """cluster + train + eval for each K on the current graph and semantics."""
    try:
        graph = ctx.graph()
        e_sem = ctx.semantic(graph)
        hits_at = sorted(ctx.config.eval.hits_at)

        rows = []
        for k in ks:
            metrics, inertia = _run_point(ctx, graph, e_sem, k)
            rows.append({"k": k, **_metric_columns(metrics, hits_at), "inertia": inertia})
            logger.info(f"sweep-k: K={k} MRR {metrics.mrr:.4f}")

        path = ctx.out_dir / SWEEP_DIR / "sweep_k.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_csv(path, rows)
        return Ok(str(path))
    except Exception as exc:
        return stage_error("sweep-k", exc)


def sweep_sparsity(
    ctx: RunContext, fractions: Sequence[float]
) -> Result[str, StageFailure]:
    """
    Remove each fraction of train edges, then re-run pretraining, clustering
    and training on what remains. Evaluation tuples are never removed.
    """
    try:
        cfg = ctx.config
        k = require_k(cfg, None) if cfg.train.use_nc else None
        base = ctx.graph()
        hits_at = sorted(cfg.eval.hits_at)

        rows = []
        for fraction in fractions:
            graph = sparsify(base, fraction, derive_seed(cfg.seed, "sparsify"))
            e_sem, _, _ = compute_semantics(cfg, graph)
            metrics, _ = _run_point(ctx, graph, e_sem, k or 1)
            rows.append(
                {
                    "fraction": fraction,
                    "train_edges": len(graph.edges(Split.train, include_inverse=False)),
                    **_metric_columns(metrics, hits_at),
                }
            )
            logger.info(f"sweep-sparsity: fraction {fraction} MRR {metrics.mrr:.4f}")

        path = ctx.out_dir / SWEEP_DIR / "sweep_sparsity.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_csv(path, rows)
        return Ok(str(path))
    except Exception as exc:
        return stage_error("sweep-sparsity", exc)
