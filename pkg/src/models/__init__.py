from .artifacts import LAYOUT_VERSION, Manifest, StageName, StageRecord
from .clusters import ClusterAssignment
from .embeddings import EmbeddingMatrix, EmbeddingRole
from .graph import KGTuple, Node, Relation, Split
from .metrics import Metrics, MetricSummary, QueryDirection, RankingResult
from .samples import ContrastiveSample, ContrastiveSampleSet, Direction
from .search import NodeSearchResult

__all__ = [
    "LAYOUT_VERSION",
    "Manifest",
    "StageName",
    "StageRecord",
    "ClusterAssignment",
    "EmbeddingMatrix",
    "EmbeddingRole",
    "KGTuple",
    "Node",
    "Relation",
    "Split",
    "Metrics",
    "MetricSummary",
    "QueryDirection",
    "RankingResult",
    "ContrastiveSample",
    "ContrastiveSampleSet",
    "Direction",
    "NodeSearchResult",
]
