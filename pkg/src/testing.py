from pathlib import Path
from typing import Sequence

import numpy as np

from .kg import Graph, Vocabulary, build_graph, parse_tuples, serialize_tuples
from .models import KGTuple

TOY_LINES = [
    "RelatedTo\teat breakfast\thave breakfast",
    "RelatedTo\thave breakfast\ttake breakfast",
    "UsedFor\tread book\tlearn",
    "RelatedTo\tread book\twrite book",
    "UsedFor\ttake breakfast\tlearn",
    "HasSubevent\teat breakfast\tread book",
]
TOY_VALID = ["UsedFor\teat breakfast\tlearn"]
TOY_TEST = ["RelatedTo\ttake breakfast\teat breakfast"]

TOPICS = [
    "breakfast", "coffee", "garden", "music", "school", "river", "winter",
    "market", "doctor", "kitchen", "library", "forest", "station", "holiday",
]
VERBS = ["make", "enjoy", "visit", "clean", "find", "share", "plan", "watch"]
PARAPHRASE_PREFIXES = ["go", "try to", "want to"]


def toy_graph(add_inverse: bool = True) -> Graph:
    """Six nodes, three relations, one valid and one test tuple."""
    train, vocab = parse_tuples(TOY_LINES)
    valid, vocab = parse_tuples(TOY_VALID, vocab=vocab)
    test, vocab = parse_tuples(TOY_TEST, vocab=vocab)
    return build_graph(train, vocab, add_inverse=add_inverse, valid=valid, test=test)


def _node_texts(num_nodes: int) -> list[str]:
    texts = []
    for i in range(num_nodes):
        verb = VERBS[i % len(VERBS)]
        topic = TOPICS[(i // len(VERBS)) % len(TOPICS)]
        texts.append(f"{verb} {topic} {i}")
    return texts


def synthetic_lines(
    num_nodes: int = 50, num_relations: int = 4, num_edges: int = 200, seed: int = 0
) -> list[str]:
    """Distinct random `rel<TAB>head<TAB>tail` lines over generated node texts."""
    max_edges = num_relations * num_nodes * (num_nodes - 1)
    if num_edges > max_edges:
        raise ValueError(f"cannot draw {num_edges} distinct edges, at most {max_edges}")

    rng = np.random.default_rng(seed)
    texts = _node_texts(num_nodes)
    relations = [f"Rel{r}" for r in range(num_relations)]

    # every node shows up at least once so the vocabulary has num_nodes entries
    chosen: set[tuple[int, int, int]] = set()
    for head in range(num_nodes):
        tail = (head + 1) % num_nodes
        chosen.add((head, int(rng.integers(num_relations)), tail))
    while len(chosen) < num_edges:
        head, tail = rng.choice(num_nodes, size=2, replace=False)
        chosen.add((int(head), int(rng.integers(num_relations)), int(tail)))

    ordered = sorted(chosen)
    rng.shuffle(ordered)
    return [f"{relations[r]}\t{texts[h]}\t{texts[t]}" for h, r, t in ordered[:num_edges]]


def synthetic_cskg(
    num_nodes: int = 50, num_relations: int = 4, num_edges: int = 200, seed: int = 0
) -> Graph:
    train, vocab = parse_tuples(synthetic_lines(num_nodes, num_relations, num_edges, seed))
    return build_graph(train, vocab)


def redundancy_lines(
    num_concepts: int = 24,
    paraphrases: int = 3,
    edges_per_concept: int = 3,
    num_relations: int = 3,
    holdout: float = 0.3,
    seed: int = 0,
) -> tuple[list[str], list[str]]:
    """
    Concept-level edges realized on paraphrase nodes that share tokens
    ("go make coffee", "try to make coffee", ...). Returns (train, test) lines
    with `holdout` of the realized edges moved to test.
    """
    rng = np.random.default_rng(seed)
    concepts = [
        f"{VERBS[i % len(VERBS)]} {TOPICS[(i // len(VERBS)) % len(TOPICS)]}"
        for i in range(num_concepts)
    ]
    variants = [
        [f"{PARAPHRASE_PREFIXES[p % len(PARAPHRASE_PREFIXES)]} {concept}" for p in range(paraphrases)]
        for concept in concepts
    ]

    concept_edges: set[tuple[int, int, int]] = set()
    for head in range(num_concepts):
        for _ in range(edges_per_concept):
            tail = int(rng.integers(num_concepts - 1))
            tail = tail + 1 if tail >= head else tail
            concept_edges.add((head, int(rng.integers(num_relations)), tail))

    lines = []
    for head, rel, tail in sorted(concept_edges):
        for _ in range(paraphrases):
            h = variants[head][int(rng.integers(paraphrases))]
            t = variants[tail][int(rng.integers(paraphrases))]
            lines.append(f"Rel{rel}\t{h}\t{t}")
    lines = list(dict.fromkeys(lines))

    order = rng.permutation(len(lines))
    n_test = int(np.floor(holdout * len(lines)))
    test = [lines[i] for i in sorted(order[:n_test])]
    train = [lines[i] for i in sorted(order[n_test:])]
    return train, test


def redundancy_benchmark(seed: int = 0, **kwargs) -> Graph:
    train_lines, test_lines = redundancy_lines(seed=seed, **kwargs)
    train, vocab = parse_tuples(train_lines)
    test, vocab = parse_tuples(test_lines, vocab=vocab)
    return build_graph(train, vocab, test=test)


def write_lines(path: str | Path, lines: Sequence[str]) -> Path:
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_tuples(path: str | Path, tuples: Sequence[KGTuple], vocab: Vocabulary) -> Path:
    return write_lines(path, list(serialize_tuples(tuples, vocab)))
