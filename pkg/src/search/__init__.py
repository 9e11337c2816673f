from .node_search import NodeSearchCache, closest_texts

__all__ = ["NodeSearchCache", "closest_texts"]
