from src._compat import StrEnum
from typing import Any, Optional

from pydantic import BaseModel

LAYOUT_VERSION = 1


class StageName(StrEnum):
    ingest = "ingest"
    densify = "densify"
    sparsify = "sparsify"
    pretrain = "pretrain"
    cluster = "cluster"
    train = "train"
    eval = "eval"


class StageRecord(BaseModel):
    stage: StageName
    files: dict[str, str]
    finished_at: str
    config: dict[str, Any]


class Manifest(BaseModel):
    layout_version: int = LAYOUT_VERSION
    stages: dict[StageName, StageRecord] = {}
    # stage whose graph snapshot downstream stages read
    graph_stage: Optional[StageName] = None
