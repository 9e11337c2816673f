from typing import Iterable, Optional, Sequence

from rapidfuzz import fuzz, process

from src.models import Node, NodeSearchResult


class NodeSearchCache:
    """Fuzzy lookup of node texts, used to resolve user queries and near-miss texts."""

    def __init__(self, nodes: Optional[Sequence[Node]] = None):
        self._texts: dict[int, str] = {}
        if nodes:
            self.update(nodes)

    def update(self, nodes: Iterable[Node]) -> None:
        for node in nodes:
            self._texts[node.id] = node.text

    def search(
        self, query: str, limit: int = 10, threshold: float = 60
    ) -> list[NodeSearchResult]:
        if not query:
            return []

        matches = process.extract(
            query,
            self._texts,
            scorer=fuzz.WRatio,
            limit=limit,
            score_cutoff=threshold,
        )
        results = [
            NodeSearchResult(node_id=node_id, text=text, score=score)
            for text, score, node_id in matches
        ]
        # exact matches first, then by score, then by id for stable output
        results.sort(key=lambda r: (r.text != query, -r.score, r.node_id))
        return results[:limit]

    def closest(self, query: str, threshold: float = 60) -> Optional[NodeSearchResult]:
        results = self.search(query, limit=1, threshold=threshold)
        return results[0] if results else None

    def clear(self) -> None:
        self._texts.clear()

    def __len__(self) -> int:
        return len(self._texts)


def closest_texts(
    queries: Iterable[str], candidates: Iterable[str], threshold: float = 60
) -> dict[str, str]:
    """Best fuzzy match among `candidates` for each query, where one clears the threshold."""
    choices = list(candidates)
    suggestions = {}
    for query in queries:
        match = process.extractOne(
            query, choices, scorer=fuzz.WRatio, score_cutoff=threshold
        )
        if match is not None:
            suggestions[query] = match[0]
    return suggestions
