from src._compat import StrEnum
from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, field_validator


class Split(StrEnum):
    train = "train"
    valid = "valid"
    test = "test"
    synthetic = "synthetic"


class Node(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    text: str

    @field_validator("text")
    @classmethod
    def text_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("node text is empty after trimming")
        return value


class Relation(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    name: str
    is_inverse: bool = False
    base_id: int
    synthetic: bool = False


class KGTuple(NamedTuple):
    head: int
    rel: int
    tail: int
