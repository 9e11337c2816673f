from typing import Optional

from src.errors import ParseError
from src.models import Node


class Vocabulary:
    """Text -> id maps for nodes and forward relations, ids assigned in order of first appearance."""

    def __init__(self, case_fold: bool = True):
        self.case_fold = case_fold
        self._node_ids: dict[str, int] = {}
        self._node_texts: list[str] = []
        self._relation_ids: dict[str, int] = {}
        self._relation_names: list[str] = []

    def normalize(self, text: str) -> str:
        text = " ".join(text.split())
        return text.lower() if self.case_fold else text

    def add_node(self, text: str, line_number: Optional[int] = None) -> int:
        key = self.normalize(text)
        if not key:
            raise ParseError("empty node text", line_number=line_number)

        if key not in self._node_ids:
            self._node_ids[key] = len(self._node_texts)
            self._node_texts.append(key)
        return self._node_ids[key]

    def add_relation(self, name: str, line_number: Optional[int] = None) -> int:
        key = name.strip()
        if not key:
            raise ParseError("empty relation name", line_number=line_number)

        if key not in self._relation_ids:
            self._relation_ids[key] = len(self._relation_names)
            self._relation_names.append(key)
        return self._relation_ids[key]

    def node_id(self, text: str) -> Optional[int]:
        return self._node_ids.get(self.normalize(text))

    def relation_id(self, name: str) -> Optional[int]:
        return self._relation_ids.get(name.strip())

    def node_text(self, node_id: int) -> str:
        return self._node_texts[node_id]

    def relation_name(self, relation_id: int) -> str:
        return self._relation_names[relation_id]

    @property
    def node_texts(self) -> list[str]:
        return list(self._node_texts)

    @property
    def relation_names(self) -> list[str]:
        return list(self._relation_names)

    @property
    def num_nodes(self) -> int:
        return len(self._node_texts)

    @property
    def num_relations(self) -> int:
        return len(self._relation_names)

    def nodes(self) -> list[Node]:
        return [Node(id=i, text=text) for i, text in enumerate(self._node_texts)]
