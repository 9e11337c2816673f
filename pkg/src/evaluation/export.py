import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import torch

from src.kg import Graph
from src.models import KGTuple, Metrics, RankingResult

from .evaluate import Scorer


def write_metrics(
    metrics: Metrics,
    path: str | Path,
    setting: str,
    tie_policy: str,
    checkpoint: Optional[str] = None,
    config: Optional[dict[str, Any]] = None,
) -> None:
    """Timestamps live under their own key so the rest stays byte-stable."""
    payload = {
        "metrics": metrics.model_dump(mode="json"),
        "setting": setting,
        "tie_policy": tie_policy,
        "checkpoint": checkpoint,
        "config": config or {},
        "timestamps": {"written_at": datetime.now(timezone.utc).isoformat()},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def write_rank_dump(
    results: Sequence[RankingResult], graph: Graph, path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("query\tgold\trank\n")
        for result in results:
            query = f"{graph.node_text(result.head)} {graph.relation_name(result.rel)}"
            f.write(f"{query}\t{graph.node_text(result.gold)}\t{result.rank}\n")


def write_top_candidates(
    model: Scorer,
    tuples: Sequence[KGTuple],
    graph: Graph,
    path: str | Path,
    top_n: int = 10,
) -> None:
    """Top-n tails per forward query, for manual judgment of predictions."""
    queries = sorted({(head, rel) for head, rel, _ in tuples})
    with open(path, "w", encoding="utf-8") as f:
        f.write("head\trelation\trank\tcandidate\tscore\n")
        for head, rel in queries:
            with torch.no_grad():
                scores = model.score(torch.tensor([head]), torch.tensor([rel]))[0]
            scores = scores.detach().cpu().numpy().astype(np.float64)
            # stable order keeps lower ids first among equal scores
            order = np.argsort(-scores, kind="stable")[:top_n]
            for position, candidate in enumerate(order, start=1):
                f.write(
                    f"{graph.node_text(head)}\t{graph.relation_name(rel)}\t{position}\t"
                    f"{graph.node_text(int(candidate))}\t{scores[candidate]:.6f}\n"
                )
