from src._compat import StrEnum

from pydantic import BaseModel


class QueryDirection(StrEnum):
    forward = "forward"
    inverse = "inverse"


class RankingResult(BaseModel):
    head: int
    rel: int
    gold: int
    rank: float
    filtered: bool
    direction: QueryDirection


class MetricSummary(BaseModel):
    mrr: float
    hits: dict[int, float]
    count: int

    def hits_at(self, k: int) -> float:
        return self.hits[k]


class Metrics(MetricSummary):
    forward: MetricSummary
    inverse: MetricSummary
    per_relation: dict[str, MetricSummary] = {}
