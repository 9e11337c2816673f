from pydantic import BaseModel


class NodeSearchResult(BaseModel):
    node_id: int
    text: str
    score: float
