from src._compat import StrEnum

from pydantic import BaseModel, ConfigDict


class Direction(StrEnum):
    forward = "forward"
    reverse = "reverse"


class ContrastiveSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    anchor: int
    positive: int
    hard_negative: int
    direction: Direction


class ContrastiveSampleSet(BaseModel):
    samples: list[ContrastiveSample]
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.samples)
