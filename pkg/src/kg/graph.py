from collections import defaultdict
from typing import Iterable, Mapping, Optional, Sequence

from loguru import logger

from src.models import KGTuple, Node, Relation, Split

from .vocab import Vocabulary

INVERSE_SUFFIX = "__inv"

# edges the model is allowed to see as structure; valid/test stay hidden
STRUCTURE_SPLITS = (Split.train, Split.synthetic)
GOLD_SPLITS = (Split.train, Split.valid, Split.test)


class Graph:
    """
    Immutable CSKG: node and relation vocabularies, every edge tagged with
    its split, and an undirected adjacency index over the structure splits.
    """

    def __init__(
        self,
        nodes: Sequence[Node],
        relations: Sequence[Relation],
        edges: Mapping[KGTuple, Split],
        augmented: bool,
    ):
        self._nodes: tuple[Node, ...] = tuple(nodes)
        self._relations: tuple[Relation, ...] = tuple(relations)
        self._edges: dict[KGTuple, Split] = dict(edges)
        self._augmented = augmented

        self._inverse_of: dict[int, int] = {}
        for relation in self._relations:
            if relation.is_inverse:
                self._inverse_of[relation.id] = relation.base_id
                self._inverse_of[relation.base_id] = relation.id

        neighbors: dict[int, set[int]] = defaultdict(set)
        for (head, _, tail), split in self._edges.items():
            if split in STRUCTURE_SPLITS:
                neighbors[head].add(tail)
                neighbors[tail].add(head)
        self._adjacency: dict[int, frozenset[int]] = {
            node: frozenset(linked) for node, linked in neighbors.items()
        }
        self._node_index = {node.text: node.id for node in self._nodes}

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self._nodes

    @property
    def relations(self) -> tuple[Relation, ...]:
        return self._relations

    @property
    def augmented(self) -> bool:
        return self._augmented

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    @property
    def num_relations(self) -> int:
        return len(self._relations)

    @property
    def edge_splits(self) -> dict[KGTuple, Split]:
        return dict(self._edges)

    def __len__(self) -> int:
        return len(self._edges)

    def __contains__(self, edge: KGTuple) -> bool:
        return edge in self._edges

    def split_of(self, edge: KGTuple) -> Optional[Split]:
        return self._edges.get(edge)

    def edges(
        self, *splits: Split, include_inverse: bool = True
    ) -> list[KGTuple]:
        wanted = set(splits) if splits else set(Split)
        return [
            edge
            for edge, split in self._edges.items()
            if split in wanted
            and (include_inverse or not self._relations[edge.rel].is_inverse)
        ]

    def split_counts(self) -> dict[str, int]:
        counts = {str(split): 0 for split in Split}
        for split in self._edges.values():
            counts[str(split)] += 1
        return counts

    def linked(self, node: int, other: int) -> bool:
        """Is `node` linked to `other` in either direction by any structure edge?"""
        return other in self._adjacency.get(node, frozenset())

    def neighbors(self, node: int) -> frozenset[int]:
        return self._adjacency.get(node, frozenset())

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    def inverse_relation(self, rel: int) -> Optional[int]:
        return self._inverse_of.get(rel)

    def inverse_edge(self, edge: KGTuple) -> Optional[KGTuple]:
        inverse = self.inverse_relation(edge.rel)
        if inverse is None:
            return None
        return KGTuple(edge.tail, inverse, edge.head)

    def relation_name(self, rel: int) -> str:
        return self._relations[rel].name

    def node_text(self, node: int) -> str:
        return self._nodes[node].text

    def node_id(self, text: str) -> Optional[int]:
        return self._node_index.get(text)

    def relation_id(self, name: str) -> Optional[int]:
        for relation in self._relations:
            if relation.name == name:
                return relation.id
        return None

    def replace_edges(self, edges: Mapping[KGTuple, Split]) -> "Graph":
        return Graph(self._nodes, self._relations, edges, augmented=self._augmented)


def inverse_name(name: str, taken: set[str]) -> str:
    candidate = f"{name}{INVERSE_SUFFIX}"
    counter = 2
    while candidate in taken:
        candidate = f"{name}{INVERSE_SUFFIX}{counter}"
        counter += 1
    return candidate


def augment_inverse(graph: Graph) -> Graph:
    """Add (t, rel⁻¹, h) for every edge. A no-op on an already augmented graph."""
    if graph.augmented:
        logger.debug("Graph already carries inverse edges, skipping augmentation")
        return graph

    relations = list(graph.relations)
    taken = {relation.name for relation in relations}
    inverse_ids: dict[int, int] = {}
    for relation in graph.relations:
        name = inverse_name(relation.name, taken)
        taken.add(name)
        inverse = Relation(
            id=len(relations),
            name=name,
            is_inverse=True,
            base_id=relation.id,
            synthetic=relation.synthetic,
        )
        relations.append(inverse)
        inverse_ids[relation.id] = inverse.id

    edges: dict[KGTuple, Split] = {}
    for edge, split in graph.edge_splits.items():
        edges.setdefault(edge, split)
    for edge, split in graph.edge_splits.items():
        inverse = KGTuple(edge.tail, inverse_ids[edge.rel], edge.head)
        edges.setdefault(inverse, split)

    return Graph(graph.nodes, relations, edges, augmented=True)


def build_graph(
    tuples: Iterable[KGTuple],
    vocab: Vocabulary,
    add_inverse: bool = True,
    valid: Iterable[KGTuple] = (),
    test: Iterable[KGTuple] = (),
) -> Graph:
    """
    Assemble a graph from train tuples (plus optional valid/test tuples that
    share the same vocabulary). With `add_inverse` the edge count and the
    relation vocabulary both double.
    """
    relations = [
        Relation(id=i, name=name, base_id=i)
        for i, name in enumerate(vocab.relation_names)
    ]

    edges: dict[KGTuple, Split] = {}
    for split, split_tuples in (
        (Split.train, tuples),
        (Split.valid, valid),
        (Split.test, test),
    ):
        for triple in split_tuples:
            edges.setdefault(KGTuple(*triple), split)

    graph = Graph(vocab.nodes(), relations, edges, augmented=False)
    if add_inverse:
        graph = augment_inverse(graph)

    logger.info(
        f"Built graph with {graph.num_nodes} nodes, {graph.num_relations} relations "
        f"and {len(graph)} edges (inverse edges: {graph.augmented})"
    )
    return graph
